//! Applies a validated [`Policy`] to a record stream.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::anon::{
    self, annihilate_time, command_group, flag_popcount, zero_one_group, AnonError, CommandLabeler,
    CompDomain, EnumerationWindow, GroupTable, KeyedMapper, MappingTable, TimeComponents,
    TimeShiftConfig, COMMAND_MARKER, FLAG_MASK,
};
use crate::codec::{AcctFlags, AcctRecord, CodecError, CompT};
use crate::policy::{AnonOption, FieldId, FieldPolicy, KeySource, Policy, PolicyError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("{field}: environment variable {var} holding the key is not set or empty")]
    MissingKey { field: FieldId, var: String },
    #[error("{field}: {source}")]
    Anon {
        field: FieldId,
        #[source]
        source: AnonError,
    },
    #[error("time shift moves record {record_index} (btime {btime}) outside the 32-bit range")]
    ShiftOverflow { record_index: u64, btime: u32 },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Field transform with whatever state it needs for the run.
enum Transform {
    Marker,
    Permute(Box<MappingTable>),
    Relabel(CommandLabeler),
    Keyed(KeyedMapper),
    Group(Option<GroupTable>),
    Annihilate(TimeComponents),
    Shift(TimeShiftConfig),
    Enumerate,
}

/// Output domain for randomized `comp_t` fields. Time-usage fields are
/// limited to `0..=65535`; the rest range over every representable value.
fn comp_domain(field: FieldId) -> CompDomain {
    if field.is_time_usage() {
        CompDomain::U16
    } else {
        CompDomain::FULL
    }
}

/// Inclusive output range for pure/keyed randomization of `field`.
fn output_range(field: FieldId) -> (u64, u64) {
    match field {
        FieldId::UserId | FieldId::GroupId | FieldId::ControllingTty => (0, 65535),
        FieldId::AccountingFlag => (0, 255),
        // outputs are indices into the comp_t domain
        _ => (0, comp_domain(field).max_index()),
    }
}

fn group_table(field: FieldId) -> Option<GroupTable> {
    match field {
        FieldId::MinorPagefaults | FieldId::MajorPagefaults => Some(anon::pagefault_table()),
        FieldId::MemoryUsage => Some(anon::memory_table()),
        _ => None,
    }
}

/// Run state: one transform per selected field, plus counters.
pub struct Anonymizer {
    policy: Policy,
    transforms: BTreeMap<FieldId, Transform>,
    window: Option<EnumerationWindow>,
    records_read: u64,
    records_written: u64,
}

impl std::fmt::Debug for Anonymizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Anonymizer")
            .field("fields", &self.transforms.keys().collect::<Vec<_>>())
            .field("records_read", &self.records_read)
            .field("records_written", &self.records_written)
            .finish_non_exhaustive()
    }
}

impl Anonymizer {
    /// Builds run state, reading `key_env` keys from the process
    /// environment. `seed` overrides the policy's seed; with neither, the
    /// seed comes from the system entropy source.
    pub fn new(policy: Policy, seed: Option<u64>) -> Result<Self, EngineError> {
        Self::with_env(policy, seed, |name| {
            std::env::var_os(name).map(|v| v.into_encoded_bytes())
        })
    }

    /// As [`Anonymizer::new`] with a caller-supplied environment lookup.
    pub fn with_env<F>(policy: Policy, seed: Option<u64>, env: F) -> Result<Self, EngineError>
    where
        F: Fn(&str) -> Option<Vec<u8>>,
    {
        let policy = policy.validated()?;
        let seed = seed.or(policy.seed).unwrap_or_else(|| rand::rng().random());
        let mut master = ChaCha8Rng::seed_from_u64(seed);

        let mut transforms = BTreeMap::new();
        let mut window = None;
        for entry in policy.entries() {
            let field = entry.field;
            // every field takes a child generator so adding or removing one
            // field does not perturb the others' tables
            let child = ChaCha8Rng::from_rng(&mut master);
            let t = build_transform(entry, child, &env, &mut window)?;
            transforms.insert(field, t);
        }
        Ok(Anonymizer {
            policy,
            transforms,
            window,
            records_read: 0,
            records_written: 0,
        })
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn records_read(&self) -> u64 {
        self.records_read
    }

    pub fn records_written(&self) -> u64 {
        self.records_written
    }

    /// The drawn time shift, if one is configured. Secret: never logged.
    pub fn shift_delta(&self) -> Option<i64> {
        match self.transforms.get(&FieldId::BeginTime) {
            Some(Transform::Shift(cfg)) => Some(cfg.delta()),
            _ => None,
        }
    }

    /// Applies every selected transform except enumeration.
    pub fn transform_fields(&mut self, mut r: AcctRecord) -> Result<AcctRecord, EngineError> {
        let index = self.records_read;
        for (&field, t) in self.transforms.iter_mut() {
            apply(field, t, &mut r, index)?;
        }
        Ok(r)
    }

    /// Transforms one record. With enumeration selected the record may be
    /// held back, and an earlier one released instead.
    pub fn anonymize_record(&mut self, r: AcctRecord) -> Result<Option<AcctRecord>, EngineError> {
        let r = self.transform_fields(r)?;
        self.records_read += 1;
        let out = match self.window.as_mut() {
            Some(w) => w.push(r),
            None => Some(r),
        };
        self.records_written += u64::from(out.is_some());
        Ok(out)
    }

    /// Releases records still held by the enumeration window.
    pub fn finish(&mut self) -> Vec<AcctRecord> {
        let rest = self.window.as_mut().map(|w| w.flush()).unwrap_or_default();
        self.records_written += rest.len() as u64;
        rest
    }

    /// Runs `input` through the anonymizer, handing each output record to
    /// `sink`. Returns the number of records written.
    pub fn anonymize_stream<I, S>(&mut self, input: I, mut sink: S) -> Result<u64, EngineError>
    where
        I: IntoIterator<Item = Result<AcctRecord, CodecError>>,
        S: FnMut(&AcctRecord) -> Result<(), CodecError>,
    {
        let before = self.records_written;
        for r in input {
            if let Some(out) = self.anonymize_record(r?)? {
                sink(&out)?;
            }
        }
        for out in self.finish() {
            sink(&out)?;
        }
        Ok(self.records_written - before)
    }

    pub fn anonymize_all(
        &mut self,
        input: Vec<AcctRecord>,
    ) -> Result<Vec<AcctRecord>, EngineError> {
        let mut out = Vec::with_capacity(input.len());
        self.anonymize_stream(input.into_iter().map(Ok), |r| {
            out.push(r.clone());
            Ok(())
        })?;
        Ok(out)
    }
}

fn resolve_key<F>(entry: &FieldPolicy, env: &F) -> Result<Vec<u8>, EngineError>
where
    F: Fn(&str) -> Option<Vec<u8>>,
{
    match entry.params.key.as_ref() {
        Some(KeySource::Inline(k)) => Ok(k.clone()),
        Some(KeySource::Env(var)) => {
            env(var)
                .filter(|k| !k.is_empty())
                .ok_or_else(|| EngineError::MissingKey {
                    field: entry.field,
                    var: var.clone(),
                })
        }
        None => Err(EngineError::Anon {
            field: entry.field,
            source: AnonError::EmptyKey,
        }),
    }
}

fn build_transform<F>(
    entry: &FieldPolicy,
    mut rng: ChaCha8Rng,
    env: &F,
    window: &mut Option<EnumerationWindow>,
) -> Result<Transform, EngineError>
where
    F: Fn(&str) -> Option<Vec<u8>>,
{
    let field = entry.field;
    let anon_err = |source| EngineError::Anon { field, source };
    let (lo, hi) = output_range(field);
    Ok(match entry.option {
        AnonOption::None => unreachable!("policy entries never hold None"),
        AnonOption::BlackMarker => Transform::Marker,
        AnonOption::PureRandom if field == FieldId::CommandName => {
            Transform::Relabel(CommandLabeler::new())
        }
        AnonOption::PureRandom => {
            Transform::Permute(Box::new(MappingTable::with_rng(lo..=hi, rng)))
        }
        AnonOption::KeyedRandom => {
            let key = resolve_key(entry, env)?;
            Transform::Keyed(KeyedMapper::new(&key, lo, hi).map_err(anon_err)?)
        }
        AnonOption::Grouping => Transform::Group(group_table(field)),
        AnonOption::TimeUnitAnnihilation => Transform::Annihilate(entry.components()),
        AnonOption::RandomTimeShift => {
            let (lower, upper) = (
                entry.params.lower.unwrap_or_default(),
                entry.params.upper.unwrap_or_default(),
            );
            Transform::Shift(TimeShiftConfig::draw(lower, upper, &mut rng).map_err(anon_err)?)
        }
        AnonOption::Enumeration => {
            *window = Some(EnumerationWindow::new(entry.params.window.unwrap_or(1)));
            Transform::Enumerate
        }
    })
}

fn comp_slot(r: &mut AcctRecord, field: FieldId) -> Option<(&'static str, &mut CompT)> {
    Some(match field {
        FieldId::UserTime => ("ac_utime", &mut r.utime),
        FieldId::SystemTime => ("ac_stime", &mut r.stime),
        FieldId::ElapsedTime => ("ac_etime", &mut r.etime),
        FieldId::CharsTransferred => ("ac_io", &mut r.io),
        FieldId::BlocksReadWritten => ("ac_rw", &mut r.rw),
        FieldId::MinorPagefaults => ("ac_minflt", &mut r.minflt),
        FieldId::MajorPagefaults => ("ac_majflt", &mut r.majflt),
        FieldId::MemoryUsage => ("ac_mem", &mut r.mem),
        FieldId::NumberOfSwaps => ("ac_swaps", &mut r.swaps),
        _ => return None,
    })
}

fn apply(
    field: FieldId,
    t: &mut Transform,
    r: &mut AcctRecord,
    index: u64,
) -> Result<(), EngineError> {
    let anon_err = |source| EngineError::Anon { field, source };
    match field {
        FieldId::CommandName => {
            r.comm = match t {
                Transform::Marker => COMMAND_MARKER.to_vec(),
                Transform::Relabel(labeler) => labeler.relabel(&r.comm),
                Transform::Keyed(m) => m.map_command(&r.comm),
                Transform::Group(_) => command_group(&r.comm).as_bytes().to_vec(),
                _ => unreachable!(),
            }
        }
        FieldId::BeginTime => match t {
            Transform::Annihilate(c) => r.btime = annihilate_time(r.btime, *c),
            Transform::Shift(cfg) => {
                r.btime = anon::random_shift(r.btime, cfg).ok_or(EngineError::ShiftOverflow {
                    record_index: index,
                    btime: r.btime,
                })?
            }
            Transform::Enumerate => {}
            _ => unreachable!(),
        },
        FieldId::UserId | FieldId::GroupId | FieldId::ControllingTty => {
            let slot = match field {
                FieldId::UserId => &mut r.uid,
                FieldId::GroupId => &mut r.gid,
                _ => &mut r.tty,
            };
            *slot = match t {
                Transform::Marker => 0,
                Transform::Permute(table) => table.map(u64::from(*slot)).map_err(anon_err)? as u16,
                Transform::Keyed(m) => m.map_u16(*slot) as u16,
                _ => unreachable!(),
            }
        }
        FieldId::AccountingFlag => {
            let flag = r.flag.bits();
            let out = match t {
                Transform::Marker => 0,
                Transform::Permute(table) => anon::flag_random(flag, table).map_err(anon_err)?,
                Transform::Keyed(m) => m.map_u8(flag) as u8 & FLAG_MASK,
                Transform::Group(_) => flag_popcount(flag),
                _ => unreachable!(),
            };
            r.flag = AcctFlags::from_bits_retain(out);
        }
        FieldId::ExitCode => {
            r.exitcode = match t {
                Transform::Marker => 0,
                Transform::Group(_) => zero_one_group(u64::from(r.exitcode)) as u32,
                _ => unreachable!(),
            }
        }
        _ => {
            let (name, slot) = comp_slot(r, field).expect("remaining fields are comp_t");
            let value = slot.value();
            let domain = comp_domain(field);
            *slot = match t {
                Transform::Marker => CompT::ZERO,
                Transform::Permute(table) => domain.comp_at(table.map(value).map_err(anon_err)?),
                Transform::Keyed(m) => domain.comp_at(m.map_u64(value)),
                Transform::Group(Some(table)) => {
                    CompT::encode_field(name, table.label(value).map_err(anon_err)?)?
                }
                Transform::Group(None) => CompT::encode_field(name, zero_one_group(value))?,
                _ => unreachable!(),
            };
        }
    }
    Ok(())
}

/// Console warning for policies that anonymize any time-usage field.
pub fn relationship_warning(policy: &Policy) -> Option<String> {
    let touched: Vec<&str> = FieldId::ALL
        .into_iter()
        .filter(|f| f.is_time_usage() && policy.option(*f) != AnonOption::None)
        .map(|f| f.name())
        .collect();
    if touched.is_empty() {
        return None;
    }
    Some(format!(
        "warning: anonymizing {} may destroy the relationship between user time, \
         system time and elapsed time",
        touched.join(", ")
    ))
}
