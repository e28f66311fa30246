//! Reading, anonymizing and writing binary UNIX process-accounting logs.
//!
//! * [`codec`]: the 60-byte record format and `comp_t` numbers.
//! * [`anon`]: per-value anonymization primitives.
//! * [`policy`]: which primitive each field gets, and the policy file.
//! * [`engine`]: applies a policy to a record stream.
//! * [`summary`]: the key-free task summary of a run.
//! * [`display`] and [`synth`]: pretty-printing and synthetic logs.

pub mod anon;
pub mod codec;
pub mod display;
pub mod engine;
pub mod policy;
pub mod summary;
pub mod synth;

pub use codec::{
    comp_decode, comp_encode, decode_record, encode_record, read_stream, write_stream, AcctFlags,
    AcctRecord, CodecError, CompT, RecordReader, RecordWriter, RECORD_LEN,
};
pub use engine::{relationship_warning, Anonymizer, EngineError};
pub use policy::{
    default_option, parse_policy, AnonOption, FieldId, FieldPolicy, KeySource, Params, Policy,
    PolicyError, Violation,
};
pub use summary::{build_summary, TaskSummary};
