use hmac::{Hmac, Mac};
use sha2::Sha256;

use super::AnonError;

type HmacSha256 = Hmac<Sha256>;

/// Deterministic pseudonymization under a secret key.
///
/// Outputs are HMAC-SHA256 over the value's little-endian bytes; the first
/// eight bytes of the tag, read little-endian, are reduced modulo the
/// output range size. Range sizes used for accounting fields are powers
/// of two, so the reduction is unbiased.
#[derive(Clone)]
pub struct KeyedMapper {
    mac: HmacSha256,
    base: u64,
    span: u64,
}

impl std::fmt::Debug for KeyedMapper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyedMapper")
            .field("base", &self.base)
            .field("span", &self.span)
            .finish_non_exhaustive()
    }
}

impl KeyedMapper {
    /// Mapper onto the inclusive range `lo..=hi`.
    pub fn new(key: &[u8], lo: u64, hi: u64) -> Result<Self, AnonError> {
        if key.is_empty() {
            return Err(AnonError::EmptyKey);
        }
        assert!(lo <= hi, "empty output range");
        let mac = HmacSha256::new_from_slice(key).expect("HMAC accepts any key length");
        Ok(KeyedMapper {
            mac,
            base: lo,
            span: (hi - lo).wrapping_add(1),
        })
    }

    pub fn tag(&self, bytes: &[u8]) -> [u8; 32] {
        let mut mac = self.mac.clone();
        mac.update(bytes);
        mac.finalize().into_bytes().into()
    }

    fn reduce(&self, tag: &[u8; 32]) -> u64 {
        let prefix = u64::from_le_bytes(tag[..8].try_into().unwrap());
        if self.span == 0 {
            // full u64 range
            prefix
        } else {
            self.base + prefix % self.span
        }
    }

    pub fn map_bytes(&self, bytes: &[u8]) -> u64 {
        self.reduce(&self.tag(bytes))
    }

    pub fn map_u8(&self, value: u8) -> u64 {
        self.map_bytes(&[value])
    }

    pub fn map_u16(&self, value: u16) -> u64 {
        self.map_bytes(&value.to_le_bytes())
    }

    pub fn map_u64(&self, value: u64) -> u64 {
        self.map_bytes(&value.to_le_bytes())
    }

    /// Eight lowercase hex characters derived from the tag of `command`.
    pub fn map_command(&self, command: &[u8]) -> Vec<u8> {
        hex::encode(&self.tag(command)[..4]).into_bytes()
    }
}

pub fn keyed_random_map(value: u16, mapper: &KeyedMapper) -> u64 {
    mapper.map_u16(value)
}
