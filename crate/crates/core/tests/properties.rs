use std::collections::HashMap;

use pacct_anon::anon::{
    annihilate_time, black_marker, memory_table, pagefault_table, random_shift, EnumerationWindow,
    KeyedMapper, TimeComponents, TimeShiftConfig,
};
use pacct_anon::codec::PAD_LEN;
use pacct_anon::synth;
use pacct_anon::{
    comp_decode, comp_encode, decode_record, encode_record, parse_policy, read_stream,
    write_stream, AcctFlags, AcctRecord, AnonOption, Anonymizer, CompT, FieldId, FieldPolicy,
    KeySource, Params, Policy,
};
use proptest::collection::vec;
use proptest::prelude::*;

fn arb_record() -> impl Strategy<Value = AcctRecord> {
    (
        (
            any::<u8>(),
            any::<u16>(),
            any::<u16>(),
            any::<u16>(),
            any::<u32>(),
        ),
        proptest::array::uniform9(any::<u16>()),
        any::<u32>(),
        vec(1u8..=255, 0..=16),
        any::<[u8; PAD_LEN]>(),
    )
        .prop_map(
            |((flag, uid, gid, tty, btime), c, exitcode, comm, pad)| AcctRecord {
                flag: AcctFlags::from_bits_retain(flag),
                uid,
                gid,
                tty,
                btime,
                utime: CompT(c[0]),
                stime: CompT(c[1]),
                etime: CompT(c[2]),
                mem: CompT(c[3]),
                io: CompT(c[4]),
                rw: CompT(c[5]),
                minflt: CompT(c[6]),
                majflt: CompT(c[7]),
                swaps: CompT(c[8]),
                exitcode,
                comm,
                pad,
            },
        )
}

fn arb_option(field: FieldId) -> impl Strategy<Value = FieldPolicy> {
    let options = field.options().to_vec();
    (
        proptest::sample::select(options),
        vec(any::<u8>(), 1..24),
        proptest::bits::u8::between(0, 6),
        -100_000i64..100_000,
        0i64..100_000,
        1usize..64,
        any::<bool>(),
    )
        .prop_map(move |(option, key, comps, lower, span, window, env)| {
            let mut params = Params::default();
            match option {
                AnonOption::KeyedRandom => {
                    params.key = Some(if env {
                        KeySource::Env("PACCT_TEST_KEY".into())
                    } else {
                        KeySource::Inline(key)
                    })
                }
                AnonOption::TimeUnitAnnihilation => {
                    params.components = Some(TimeComponents::from_bits_truncate(comps))
                }
                AnonOption::RandomTimeShift => {
                    params.lower = Some(lower);
                    params.upper = Some(lower + span);
                }
                AnonOption::Enumeration => params.window = Some(window),
                _ => {}
            }
            FieldPolicy {
                field,
                option,
                params,
            }
        })
}

fn arb_policy() -> impl Strategy<Value = Policy> {
    let per_field: Vec<_> = FieldId::ALL
        .iter()
        .map(|&f| proptest::option::of(arb_option(f)))
        .collect();
    (per_field, proptest::option::of(any::<u64>())).prop_map(|(entries, seed)| {
        let mut p = Policy::new();
        p.seed = seed;
        for e in entries.into_iter().flatten() {
            p.set(e);
        }
        p
    })
}

/// Wire bytes of each of the sixteen fields plus the padding.
fn field_bytes(r: &AcctRecord) -> Vec<(Option<FieldId>, Vec<u8>)> {
    let c = |v: CompT| v.0.to_le_bytes().to_vec();
    vec![
        (Some(FieldId::CommandName), r.comm.clone()),
        (Some(FieldId::BeginTime), r.btime.to_le_bytes().to_vec()),
        (Some(FieldId::UserId), r.uid.to_le_bytes().to_vec()),
        (Some(FieldId::GroupId), r.gid.to_le_bytes().to_vec()),
        (Some(FieldId::UserTime), c(r.utime)),
        (Some(FieldId::SystemTime), c(r.stime)),
        (Some(FieldId::ElapsedTime), c(r.etime)),
        (Some(FieldId::AccountingFlag), vec![r.flag.bits()]),
        (Some(FieldId::ControllingTty), r.tty.to_le_bytes().to_vec()),
        (Some(FieldId::ExitCode), r.exitcode.to_le_bytes().to_vec()),
        (Some(FieldId::CharsTransferred), c(r.io)),
        (Some(FieldId::BlocksReadWritten), c(r.rw)),
        (Some(FieldId::MinorPagefaults), c(r.minflt)),
        (Some(FieldId::MajorPagefaults), c(r.majflt)),
        (Some(FieldId::MemoryUsage), c(r.mem)),
        (Some(FieldId::NumberOfSwaps), c(r.swaps)),
        (None, r.pad.to_vec()),
    ]
}

fn test_env(_: &str) -> Option<Vec<u8>> {
    Some(b"environment key".to_vec())
}

proptest! {
    #[test]
    fn record_round_trip(r in arb_record()) {
        let buf = encode_record(&r).unwrap();
        prop_assert_eq!(decode_record(&buf).unwrap(), r);
    }

    #[test]
    fn stream_round_trip(rs in vec(arb_record(), 0..40)) {
        let mut bytes = Vec::new();
        let n = write_stream(&rs, &mut bytes).unwrap();
        prop_assert_eq!(n as usize, rs.len());
        prop_assert_eq!(bytes.len(), 60 * rs.len());
        prop_assert_eq!(read_stream(&bytes[..]).unwrap(), rs);
    }

    #[test]
    fn comp_encode_truncates_canonically(v in 0..=CompT::MAX_VALUE) {
        let raw = comp_encode(v).unwrap();
        let exponent = u32::from(raw >> 13);
        let step = 8u64.pow(exponent);
        prop_assert_eq!(comp_decode(raw), v / step * step);
        // smallest exponent: a smaller one would overflow the mantissa
        if exponent > 0 {
            prop_assert!(v / 8u64.pow(exponent - 1) > 8191);
        }
    }

    #[test]
    fn policy_render_round_trip(p in arb_policy()) {
        prop_assert!(p.validate().is_empty());
        prop_assert_eq!(parse_policy(&p.render()).unwrap(), p);
    }

    #[test]
    fn policy_parser_never_panics(text in "[ -~\n]{0,200}") {
        let _ = parse_policy(&text);
    }

    #[test]
    fn black_marker_is_constant(a in any::<u16>(), b in any::<u16>(), k in any::<u16>()) {
        prop_assert_eq!(black_marker(a, k), black_marker(b, k));
    }

    #[test]
    fn shift_preserves_order(
        btimes in vec(1_000_000u32..2_000_000_000, 1..100),
        delta in -1_000_000i64..1_000_000,
    ) {
        let cfg = TimeShiftConfig::with_delta(-1_000_000, 1_000_000, delta).unwrap();
        let shifted: Vec<u32> = btimes.iter().map(|&t| random_shift(t, &cfg).unwrap()).collect();
        let mut by_orig: Vec<usize> = (0..btimes.len()).collect();
        by_orig.sort_by_key(|&i| btimes[i]);
        let mut by_shift: Vec<usize> = (0..btimes.len()).collect();
        by_shift.sort_by_key(|&i| shifted[i]);
        prop_assert_eq!(by_orig, by_shift);
    }

    #[test]
    fn annihilation_is_idempotent_and_never_later(t in any::<u32>(), bits in 0u8..64) {
        let c = TimeComponents::from_bits_truncate(bits);
        let once = annihilate_time(t, c);
        prop_assert!(once <= t);
        prop_assert_eq!(annihilate_time(once, c), once);
    }

    #[test]
    fn enumeration_matches_full_sort(
        len in 0usize..300,
        d in 0usize..20,
        extra in 0usize..5,
        seed in any::<u64>(),
    ) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut idx: Vec<usize> = (0..len).collect();
        synth::displace_locally(&mut idx, d, &mut rng);
        let mut w = EnumerationWindow::new(d.max(1) + extra);
        let mut out = Vec::new();
        for &i in &idx {
            let r = AcctRecord { btime: i as u32 * 2, uid: i as u16, ..Default::default() };
            out.extend(w.push(r));
            prop_assert!(w.buffered() <= w.window_size());
        }
        out.extend(w.flush());
        let uids: Vec<usize> = out.iter().map(|r| r.uid as usize).collect();
        prop_assert_eq!(uids, (0..len).collect::<Vec<_>>());
        let btimes: Vec<u32> = out.iter().map(|r| r.btime).collect();
        prop_assert_eq!(btimes, (1..=len as u32).collect::<Vec<_>>());
    }

    #[test]
    fn field_isolation(field_ix in 0usize..16, seed in any::<u64>(), choice in any::<proptest::sample::Index>()) {
        let field = FieldId::ALL[field_ix];
        let option = *choice.get(field.options());
        let mut params = Params::default();
        match option {
            AnonOption::KeyedRandom => params.key = Some(KeySource::Inline(b"k".to_vec())),
            AnonOption::RandomTimeShift => { params.lower = Some(-50); params.upper = Some(50); }
            AnonOption::Enumeration => params.window = Some(4),
            _ => {}
        }
        let policy = Policy::new().with(FieldPolicy { field, option, params });
        let input = synth::generate(100, seed);
        let output = Anonymizer::new(policy, Some(seed)).unwrap().anonymize_all(input.clone()).unwrap();
        prop_assert_eq!(output.len(), input.len());

        let strip = |r: &AcctRecord| -> Vec<Vec<u8>> {
            field_bytes(r).into_iter().filter(|(f, _)| *f != Some(field)).map(|(_, b)| b).collect()
        };
        if option == AnonOption::Enumeration {
            let mut a: Vec<_> = input.iter().map(strip).collect();
            let mut b: Vec<_> = output.iter().map(strip).collect();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        } else {
            for (i, o) in input.iter().zip(&output) {
                prop_assert_eq!(strip(i), strip(o));
            }
        }
    }

    #[test]
    fn deterministic_runs(p in arb_policy(), seed in any::<u64>()) {
        let input = synth::generate(60, seed);
        let run = || {
            let mut a = Anonymizer::with_env(p.clone(), Some(seed), test_env).unwrap();
            let mut bytes = Vec::new();
            let records = a.anonymize_all(input.clone());
            records.map(|rs| {
                write_stream(&rs, &mut bytes).unwrap();
                bytes
            })
        };
        match (run(), run()) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            // shifts can legitimately overflow; both runs must agree on that too
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            (a, b) => prop_assert!(false, "runs disagree: {:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn keyed_outputs_in_range(v in any::<u16>(), key in vec(any::<u8>(), 1..32)) {
        let m = KeyedMapper::new(&key, 0, 65535).unwrap();
        prop_assert!(m.map_u16(v) <= 65535);
        prop_assert_eq!(m.map_u16(v), KeyedMapper::new(&key, 0, 65535).unwrap().map_u16(v));
    }
}

#[test]
fn group_tables_are_total_on_16_bit_domain() {
    for table in [pagefault_table(), memory_table()] {
        for v in 0..=u64::from(u16::MAX) {
            let hits = table.groups().iter().filter(|g| g.contains(v)).count();
            assert_eq!(hits, 1, "{} value {v}", table.name());
            assert!(table.label(v).is_ok());
        }
        assert!(table.label(CompT::MAX_VALUE).is_ok());
    }
}

#[test]
fn group_tables_are_total_on_sampled_32_bit_domain() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    for table in [pagefault_table(), memory_table()] {
        for _ in 0..100_000 {
            let v = u64::from(rng.random::<u32>());
            let hits = table.groups().iter().filter(|g| g.contains(v)).count();
            assert_eq!(hits, 1);
        }
    }
}

#[test]
fn representative_membership() {
    // every label lies in its own subset except memory's last row
    assert!(pagefault_table().foreign_labels().is_empty());
    let foreign = memory_table().foreign_labels();
    assert_eq!(foreign.len(), 1);
    assert_eq!((foreign[0].lo, foreign[0].label), (2001, 2000));
}

#[test]
fn pure_random_table_is_injective_after_run() {
    let input = synth::generate(5000, 8);
    let policy = parse_policy(
        "user_id = pure_random\nchars_transferred = pure_random\nuser_time = pure_random",
    )
    .unwrap();
    let output = Anonymizer::new(policy, Some(3))
        .unwrap()
        .anonymize_all(input.clone())
        .unwrap();
    for get in [
        |r: &AcctRecord| u64::from(r.uid),
        |r: &AcctRecord| r.io.value(),
        |r: &AcctRecord| r.utime.value(),
    ] {
        let mut forward: HashMap<u64, u64> = HashMap::new();
        let mut inverse: HashMap<u64, u64> = HashMap::new();
        for (i, o) in input.iter().zip(&output) {
            assert_eq!(*forward.entry(get(i)).or_insert(get(o)), get(o));
            assert_eq!(*inverse.entry(get(o)).or_insert(get(i)), get(i));
        }
    }
}

#[test]
fn keyed_is_deterministic_across_runs() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
    let a = KeyedMapper::new(b"shared", 0, 65535).unwrap();
    let b = KeyedMapper::new(b"shared", 0, 65535).unwrap();
    for _ in 0..10_000 {
        let v: u16 = rng.random();
        assert_eq!(a.map_u16(v), b.map_u16(v));
    }
}
