//! Synthetic accounting logs for tests, demos and benchmarks.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::anon::COMMAND_CLASSES;
use crate::codec::{AcctFlags, AcctRecord, CompT, ACCT_COMM, PAD_LEN};

/// Begin time of the first synthetic record (2005-12-08).
pub const BASE_BTIME: u32 = 1_134_000_000;

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    /// No record ends up more than this many places from its sorted position.
    pub max_displacement: usize,
    /// Largest gap in seconds between consecutive begin times.
    pub max_gap: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            max_displacement: 8,
            max_gap: 20,
        }
    }
}

/// `count` records with the default shape, deterministic in `seed`.
pub fn generate(count: usize, seed: u64) -> Vec<AcctRecord> {
    generate_with(count, seed, SynthConfig::default())
}

pub fn generate_with(count: usize, seed: u64, config: SynthConfig) -> Vec<AcctRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut btime = BASE_BTIME;
    let mut records: Vec<AcctRecord> = (0..count)
        .map(|_| {
            btime = btime.saturating_add(rng.random_range(0..=config.max_gap));
            random_record(&mut rng, btime)
        })
        .collect();
    displace_locally(&mut records, config.max_displacement, &mut rng);
    records
}

/// Reorders `items` so that none moves more than `max_displacement`
/// places: each item is keyed by its index plus a uniform jitter in
/// `[0, max_displacement]` and the sequence is sorted by key.
pub fn displace_locally<T, R: Rng + ?Sized>(
    items: &mut Vec<T>,
    max_displacement: usize,
    rng: &mut R,
) {
    if max_displacement == 0 {
        return;
    }
    let mut keyed: Vec<(f64, T)> = items
        .drain(..)
        .enumerate()
        .map(|(i, t)| (i as f64 + rng.random::<f64>() * max_displacement as f64, t))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    items.extend(keyed.into_iter().map(|(_, t)| t));
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, max: f64) -> u64 {
    if rng.random_bool(0.15) {
        return 0;
    }
    (max + 1.0).powf(rng.random::<f64>()) as u64 - 1
}

fn comp<R: Rng + ?Sized>(rng: &mut R, max: f64) -> CompT {
    let v = log_uniform(rng, max).min(CompT::MAX_VALUE);
    CompT::from_value(v).expect("clamped to range")
}

fn random_command<R: Rng + ?Sized>(rng: &mut R) -> Vec<u8> {
    if rng.random_bool(0.8) {
        let (_, members) = COMMAND_CLASSES.choose(rng).expect("classes are non-empty");
        members
            .choose(rng)
            .expect("class is non-empty")
            .as_bytes()
            .to_vec()
    } else {
        let len = rng.random_range(2..=ACCT_COMM);
        (0..len).map(|_| rng.random_range(b'a'..=b'z')).collect()
    }
}

fn random_record<R: Rng + ?Sized>(rng: &mut R, btime: u32) -> AcctRecord {
    let uid = if rng.random_bool(0.3) {
        0
    } else {
        rng.random_range(100..=160)
    };
    let mut flag = AcctFlags::empty();
    for (bit, p) in [
        (AcctFlags::FORK, 0.2),
        (AcctFlags::SUPERUSER, 0.25),
        (AcctFlags::CORE_DUMP, 0.02),
        (AcctFlags::SIGNALED, 0.05),
    ] {
        if rng.random_bool(p) {
            flag |= bit;
        }
    }
    let tty = if rng.random_bool(0.5) {
        0
    } else {
        (136 << 8) | rng.random_range(0..32u16)
    };
    let exitcode = match rng.random_range(0..10) {
        0 => 1,
        1 => 256 * rng.random_range(1..4),
        2 => rng.random_range(1..32),
        _ => 0,
    };
    let mut pad = [0u8; PAD_LEN];
    if rng.random_bool(0.1) {
        rng.fill(&mut pad);
    }
    let utime = comp(rng, 2e4);
    let stime = comp(rng, 5e3);
    AcctRecord {
        flag,
        uid,
        gid: if uid == 0 {
            0
        } else {
            rng.random_range(100..=110)
        },
        tty,
        btime,
        utime,
        stime,
        etime: comp(rng, 1e7),
        mem: comp(rng, 5e4),
        io: comp(rng, 1e10),
        rw: comp(rng, 1e6),
        minflt: comp(rng, 1e6),
        majflt: comp(rng, 5e3),
        swaps: comp(rng, 50.0),
        exitcode,
        comm: random_command(rng),
        pad,
    }
}
