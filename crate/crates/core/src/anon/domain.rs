use crate::codec::CompT;

const EXP0_VALUES: u64 = 8192;
/// Canonical mantissas for exponents >= 1 are 1024..=8191.
const PER_EXPONENT: u64 = 8192 - 1024;

/// The values a `comp_t` represents exactly, enumerated in increasing
/// order, optionally capped at an upper bound.
///
/// Randomized `comp_t` fields draw an index into this domain, so every
/// output re-encodes without rounding and permutations stay injective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompDomain {
    len: u64,
}

impl CompDomain {
    /// Every exactly representable value (58368 of them).
    pub const FULL: CompDomain = CompDomain {
        len: EXP0_VALUES + 7 * PER_EXPONENT,
    };
    /// Exactly representable values in `0..=65535` (15360 of them).
    pub const U16: CompDomain = CompDomain {
        len: EXP0_VALUES + PER_EXPONENT,
    };

    pub fn len(self) -> u64 {
        self.len
    }

    pub fn is_empty(self) -> bool {
        self.len == 0
    }

    pub fn max_index(self) -> u64 {
        self.len - 1
    }

    pub fn value_at(self, index: u64) -> u64 {
        assert!(index < self.len, "index {index} outside comp_t domain");
        if index < EXP0_VALUES {
            return index;
        }
        let rest = index - EXP0_VALUES;
        let exponent = 1 + rest / PER_EXPONENT;
        let mantissa = 1024 + rest % PER_EXPONENT;
        mantissa << (3 * exponent)
    }

    pub fn comp_at(self, index: u64) -> CompT {
        CompT::from_value(self.value_at(index)).expect("domain values are representable")
    }
}
