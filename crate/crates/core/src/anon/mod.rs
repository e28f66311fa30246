//! Field-level anonymization primitives.
//!
//! Each primitive is a small transform over one field value. Stateful ones
//! (permutation tables, keyed mappers, the enumeration window, the time
//! shift) keep their state in an explicit object owned by the caller.

mod domain;
mod enumerate;
mod group;
mod keyed;
mod mapping;
mod time;

use thiserror::Error;

pub use domain::CompDomain;
pub use enumerate::{enumerate_flush, enumerate_push, EnumerationWindow};
pub use group::{
    command_group, flag_popcount, group_map, memory_table, pagefault_table, zero_one_group, Group,
    GroupTable, COMMAND_CLASSES, MISC_CLASS,
};
pub use keyed::{keyed_random_map, KeyedMapper};
pub use mapping::{
    command_relabel, flag_random, pure_random_map, CommandLabeler, MappingTable, FLAG_MASK,
};
pub use time::{annihilate_time, random_shift, TimeComponents, TimeShiftConfig};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnonError {
    #[error("keyed randomization requires a non-empty key")]
    EmptyKey,
    #[error("permutation range exhausted after {distinct} distinct inputs")]
    RangeExhausted { distinct: usize },
    #[error("value {value} is outside every subset of the {table} grouping")]
    OutsideDomain { table: &'static str, value: u64 },
    #[error("invalid partition: {0}")]
    BadPartition(String),
    #[error("shift bounds {lower}..={upper} are empty")]
    BadShiftBounds { lower: i64, upper: i64 },
}

/// Label written over every command name by the black marker.
pub const COMMAND_MARKER: &[u8] = b"command";

/// Replaces any value with `constant`.
pub fn black_marker<T>(_value: T, constant: T) -> T {
    constant
}
