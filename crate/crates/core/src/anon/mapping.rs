use std::collections::HashMap;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::AnonError;

/// Table-backed random permutation of a field's values.
///
/// Each new input draws an output uniformly from the outputs not yet
/// assigned, so the table is injective and a repeated input always gets
/// its first answer back. Unused outputs are tracked as a virtual array
/// that is shuffled lazily (Fisher-Yates with a sparse swap map), which
/// keeps draws O(1) even when the range is nearly exhausted.
#[derive(Debug, Clone)]
pub struct MappingTable {
    entries: HashMap<u64, u64>,
    base: u64,
    remaining: u64,
    swapped: HashMap<u64, u64>,
    rng: ChaCha8Rng,
}

impl MappingTable {
    pub fn new(range: RangeInclusive<u64>, seed: u64) -> Self {
        Self::with_rng(range, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(range: RangeInclusive<u64>, rng: ChaCha8Rng) -> Self {
        let (lo, hi) = range.into_inner();
        assert!(lo <= hi, "empty output range");
        MappingTable {
            entries: HashMap::new(),
            base: lo,
            remaining: hi - lo + 1,
            swapped: HashMap::new(),
            rng,
        }
    }

    /// Maps `value`, drawing a fresh output on first sight.
    pub fn map(&mut self, value: u64) -> Result<u64, AnonError> {
        if let Some(&out) = self.entries.get(&value) {
            return Ok(out);
        }
        if self.remaining == 0 {
            return Err(AnonError::RangeExhausted {
                distinct: self.entries.len() + 1,
            });
        }
        let pick = self.rng.random_range(0..self.remaining);
        let last = self.remaining - 1;
        let chosen = self.slot(pick);
        let tail = self.slot(last);
        self.swapped.insert(pick, tail);
        self.swapped.remove(&last);
        self.remaining -= 1;

        let out = self.base + chosen;
        self.entries.insert(value, out);
        Ok(out)
    }

    fn slot(&self, index: u64) -> u64 {
        self.swapped.get(&index).copied().unwrap_or(index)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, value: u64) -> Option<u64> {
        self.entries.get(&value).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }
}

/// Maps `value` through `table`; see [`MappingTable::map`].
pub fn pure_random_map(value: u64, table: &mut MappingTable) -> Result<u64, AnonError> {
    table.map(value)
}

/// Mask applied to randomized accounting flags: fork, superuser and
/// core-dump bits (binary 0001011).
pub const FLAG_MASK: u8 = 0b0000_1011;

/// Permutes the flag byte through `table` (range 0..=255) and keeps only
/// the bits in [`FLAG_MASK`].
pub fn flag_random(flag: u8, table: &mut MappingTable) -> Result<u8, AnonError> {
    let drawn = table.map(u64::from(flag))?;
    Ok(drawn as u8 & FLAG_MASK)
}

/// Replaces command names with `COMM1`, `COMM2`, ... in order of first
/// appearance.
#[derive(Debug, Clone, Default)]
pub struct CommandLabeler {
    labels: HashMap<Vec<u8>, u64>,
}

impl CommandLabeler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn relabel(&mut self, command: &[u8]) -> Vec<u8> {
        let next = self.labels.len() as u64 + 1;
        let n = *self.labels.entry(command.to_vec()).or_insert(next);
        format!("COMM{n}").into_bytes()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn command_relabel(command: &[u8], labeler: &mut CommandLabeler) -> Vec<u8> {
    labeler.relabel(command)
}
