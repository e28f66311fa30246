//! Fixtures shared by the throughput benchmarks.

use pacct_anon::{parse_policy, synth, write_stream, AcctRecord, Policy};

/// Synthetic log with a fixed seed.
pub fn sample_log(count: usize) -> Vec<AcctRecord> {
    synth::generate(count, 0x5eed)
}

pub fn sample_bytes(count: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(count * pacct_anon::RECORD_LEN);
    write_stream(&sample_log(count), &mut out).expect("in-memory write");
    out
}

/// Policies from cheapest to most stateful.
pub fn policies() -> Vec<(&'static str, Policy)> {
    [
        ("identity", ""),
        (
            "black_marker",
            "user_id = black_marker\ngroup_id = black_marker\ncommand_name = black_marker",
        ),
        (
            "grouping",
            "command_name = grouping\nmemory_usage = grouping\nexit_code = grouping",
        ),
        (
            "pure_random",
            "user_id = pure_random\nuser_time = pure_random\ncommand_name = pure_random",
        ),
        (
            "keyed_random",
            "user_id = keyed_random key=bench\ncommand_name = keyed_random key=bench",
        ),
        ("enumeration", "begin_time = enumeration window=64"),
    ]
    .into_iter()
    .map(|(name, text)| (name, parse_policy(text).expect("bench policy parses")))
    .collect()
}
