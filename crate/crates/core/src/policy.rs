//! Per-field anonymization policies and the policy-file format.
//!
//! A policy file is line oriented:
//!
//! ```text
//! # comments run to end of line
//! seed = 42
//! command_name = grouping
//! begin_time = random_time_shift lower=-3600 upper=3600
//! user_id = keyed_random key_env=PACCT_KEY
//! memory_usage                      # no option: the field's default
//! ```
//!
//! Field, option and parameter names are case-insensitive and accept `-`
//! in place of `_`. Fields that do not appear are left unchanged.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::anon::TimeComponents;

/// The sixteen anonymizable record fields, numbered in presentation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FieldId {
    CommandName = 1,
    BeginTime = 2,
    UserId = 3,
    GroupId = 4,
    UserTime = 5,
    SystemTime = 6,
    ElapsedTime = 7,
    AccountingFlag = 8,
    ControllingTty = 9,
    ExitCode = 10,
    CharsTransferred = 11,
    BlocksReadWritten = 12,
    MinorPagefaults = 13,
    MajorPagefaults = 14,
    MemoryUsage = 15,
    NumberOfSwaps = 16,
}

/// The anonymization methods a field can be given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AnonOption {
    None,
    BlackMarker,
    PureRandom,
    KeyedRandom,
    Grouping,
    TimeUnitAnnihilation,
    RandomTimeShift,
    Enumeration,
}

use AnonOption::*;

const NUMERIC_ALL: &[AnonOption] = &[BlackMarker, PureRandom, KeyedRandom, Grouping];
const ID_ONLY: &[AnonOption] = &[BlackMarker, PureRandom, KeyedRandom];

impl FieldId {
    pub const ALL: [FieldId; 16] = [
        FieldId::CommandName,
        FieldId::BeginTime,
        FieldId::UserId,
        FieldId::GroupId,
        FieldId::UserTime,
        FieldId::SystemTime,
        FieldId::ElapsedTime,
        FieldId::AccountingFlag,
        FieldId::ControllingTty,
        FieldId::ExitCode,
        FieldId::CharsTransferred,
        FieldId::BlocksReadWritten,
        FieldId::MinorPagefaults,
        FieldId::MajorPagefaults,
        FieldId::MemoryUsage,
        FieldId::NumberOfSwaps,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldId::CommandName => "command_name",
            FieldId::BeginTime => "begin_time",
            FieldId::UserId => "user_id",
            FieldId::GroupId => "group_id",
            FieldId::UserTime => "user_time",
            FieldId::SystemTime => "system_time",
            FieldId::ElapsedTime => "elapsed_time",
            FieldId::AccountingFlag => "accounting_flag",
            FieldId::ControllingTty => "controlling_tty",
            FieldId::ExitCode => "exit_code",
            FieldId::CharsTransferred => "chars_transferred",
            FieldId::BlocksReadWritten => "blocks_read_written",
            FieldId::MinorPagefaults => "minor_pagefaults",
            FieldId::MajorPagefaults => "major_pagefaults",
            FieldId::MemoryUsage => "memory_usage",
            FieldId::NumberOfSwaps => "number_of_swaps",
        }
    }

    /// Legal options for this field, in menu order. `None` is always
    /// allowed and not listed.
    pub fn options(self) -> &'static [AnonOption] {
        match self {
            FieldId::CommandName => NUMERIC_ALL,
            FieldId::BeginTime => &[TimeUnitAnnihilation, RandomTimeShift, Enumeration],
            FieldId::UserId | FieldId::GroupId | FieldId::ControllingTty => ID_ONLY,
            FieldId::ExitCode => &[BlackMarker, Grouping],
            FieldId::UserTime
            | FieldId::SystemTime
            | FieldId::ElapsedTime
            | FieldId::AccountingFlag
            | FieldId::CharsTransferred
            | FieldId::BlocksReadWritten
            | FieldId::MinorPagefaults
            | FieldId::MajorPagefaults
            | FieldId::MemoryUsage
            | FieldId::NumberOfSwaps => NUMERIC_ALL,
        }
    }

    pub fn allows(self, option: AnonOption) -> bool {
        option == None || self.options().contains(&option)
    }

    pub fn is_time_usage(self) -> bool {
        matches!(
            self,
            FieldId::UserTime | FieldId::SystemTime | FieldId::ElapsedTime
        )
    }

    /// Name of the grouping applied under [`AnonOption::Grouping`].
    pub fn grouping_name(self) -> Option<&'static str> {
        match self {
            FieldId::CommandName => Some("command-class"),
            FieldId::AccountingFlag => Some("bit-count"),
            FieldId::MinorPagefaults | FieldId::MajorPagefaults => Some("pagefault"),
            FieldId::MemoryUsage => Some("memory"),
            FieldId::UserTime
            | FieldId::SystemTime
            | FieldId::ElapsedTime
            | FieldId::ExitCode
            | FieldId::CharsTransferred
            | FieldId::BlocksReadWritten
            | FieldId::NumberOfSwaps => Some("zero-one"),
            FieldId::BeginTime | FieldId::UserId | FieldId::GroupId | FieldId::ControllingTty => {
                Option::None
            }
        }
    }
}

impl fmt::Display for FieldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn normalize(name: &str) -> String {
    name.trim().to_ascii_lowercase().replace('-', "_")
}

impl FromStr for FieldId {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let s = normalize(s);
        FieldId::ALL.into_iter().find(|f| f.name() == s).ok_or(())
    }
}

impl AnonOption {
    pub const ALL: [AnonOption; 8] = [
        None,
        BlackMarker,
        PureRandom,
        KeyedRandom,
        Grouping,
        TimeUnitAnnihilation,
        RandomTimeShift,
        Enumeration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            None => "none",
            BlackMarker => "black_marker",
            PureRandom => "pure_random",
            KeyedRandom => "keyed_random",
            Grouping => "grouping",
            TimeUnitAnnihilation => "time_unit_annihilation",
            RandomTimeShift => "random_time_shift",
            Enumeration => "enumeration",
        }
    }
}

impl fmt::Display for AnonOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnonOption {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let s = normalize(s);
        AnonOption::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or(())
    }
}

/// The option applied to a field selected without naming one.
pub fn default_option(field: FieldId) -> AnonOption {
    field.options()[0]
}

/// Where the secret for keyed randomization comes from.
#[derive(Clone, PartialEq, Eq)]
pub enum KeySource {
    Inline(Vec<u8>),
    /// Name of an environment variable holding the key.
    Env(String),
}

impl fmt::Debug for KeySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeySource::Inline(_) => f.write_str("Inline(<redacted>)"),
            KeySource::Env(name) => f.debug_tuple("Env").field(name).finish(),
        }
    }
}

/// Option parameters. Which ones are required depends on the option.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Params {
    pub key: Option<KeySource>,
    pub components: Option<TimeComponents>,
    pub lower: Option<i64>,
    pub upper: Option<i64>,
    pub window: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldPolicy {
    pub field: FieldId,
    pub option: AnonOption,
    pub params: Params,
}

impl FieldPolicy {
    pub fn new(field: FieldId, option: AnonOption) -> Self {
        FieldPolicy {
            field,
            option,
            params: Params::default(),
        }
    }

    /// Components annihilated; every component when none were given.
    pub fn components(&self) -> TimeComponents {
        self.params.components.unwrap_or(TimeComponents::all())
    }

    fn violations(&self, out: &mut Vec<Violation>) {
        let field = self.field;
        if !field.allows(self.option) {
            out.push(Violation::Matrix {
                field,
                option: self.option,
            });
            return;
        }
        let mut config = |message: String| out.push(Violation::Config { field, message });
        let p = &self.params;
        let allowed: &[&str] = match self.option {
            KeyedRandom => &["key"],
            TimeUnitAnnihilation => &["components"],
            RandomTimeShift => &["lower", "upper"],
            Enumeration => &["window"],
            _ => &[],
        };
        let given = [
            ("key", p.key.is_some()),
            ("components", p.components.is_some()),
            ("lower", p.lower.is_some()),
            ("upper", p.upper.is_some()),
            ("window", p.window.is_some()),
        ];
        for (name, present) in given {
            if present && !allowed.contains(&name) {
                config(format!(
                    "parameter `{name}` does not apply to {}",
                    self.option
                ));
            }
        }
        match self.option {
            KeyedRandom => match &p.key {
                Option::None => {
                    config("keyed_random requires a key (key=, key_hex= or key_env=)".into())
                }
                Some(KeySource::Inline(k)) if k.is_empty() => config("key is empty".into()),
                Some(KeySource::Env(name)) if name.is_empty() => {
                    config("key_env names no variable".into())
                }
                _ => {}
            },
            RandomTimeShift => match (p.lower, p.upper) {
                (Some(lo), Some(hi)) if lo > hi => {
                    config(format!("shift lower bound {lo} exceeds upper bound {hi}"))
                }
                (Some(_), Some(_)) => {}
                _ => config("random_time_shift requires lower= and upper=".into()),
            },
            Enumeration => match p.window {
                Some(0) => config("window must be at least 1".into()),
                Some(_) => {}
                Option::None => config("enumeration requires window=".into()),
            },
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// The option is not offered for the field.
    Matrix { field: FieldId, option: AnonOption },
    /// A parameter is missing, malformed or not applicable.
    Config { field: FieldId, message: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Matrix { field, option } => {
                let legal: Vec<&str> = field.options().iter().map(|o| o.name()).collect();
                write!(
                    f,
                    "{field}: option {option} is not available (choose one of: {})",
                    legal.join(", ")
                )
            }
            Violation::Config { field, message } => write!(f, "{field}: {message}"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolicyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid policy: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// A validated-or-not set of field policies plus the run seed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Policy {
    entries: BTreeMap<FieldId, FieldPolicy>,
    pub seed: Option<u64>,
}

impl Policy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets the policy for `entry.field`, replacing any earlier one. A
    /// `None` option clears the field.
    pub fn set(&mut self, entry: FieldPolicy) {
        if entry.option == None {
            self.entries.remove(&entry.field);
        } else {
            self.entries.insert(entry.field, entry);
        }
    }

    pub fn with(mut self, entry: FieldPolicy) -> Self {
        self.set(entry);
        self
    }

    pub fn get(&self, field: FieldId) -> Option<&FieldPolicy> {
        self.entries.get(&field)
    }

    pub fn option(&self, field: FieldId) -> AnonOption {
        self.get(field).map_or(None, |e| e.option)
    }

    /// Entries with an option other than `None`, in field order.
    pub fn entries(&self) -> impl Iterator<Item = &FieldPolicy> {
        self.entries.values()
    }

    pub fn is_identity(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for entry in self.entries.values() {
            entry.violations(&mut out);
        }
        out
    }

    pub fn validated(self) -> Result<Self, PolicyError> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(PolicyError::Invalid(violations))
        }
    }

    /// Renders the policy in the file format. Inline keys are written as
    /// `key_hex=`; the output is for round-tripping, not for display.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(seed) = self.seed {
            out.push_str(&format!("seed = {seed}\n"));
        }
        for e in self.entries.values() {
            out.push_str(&format!("{} = {}", e.field, e.option));
            let p = &e.params;
            match &p.key {
                Some(KeySource::Inline(k)) => out.push_str(&format!(" key_hex={}", hex::encode(k))),
                Some(KeySource::Env(name)) => out.push_str(&format!(" key_env={name}")),
                Option::None => {}
            }
            if let Some(c) = p.components {
                out.push_str(&format!(" components={c}"));
            }
            if let Some(lo) = p.lower {
                out.push_str(&format!(" lower={lo}"));
            }
            if let Some(hi) = p.upper {
                out.push_str(&format!(" upper={hi}"));
            }
            if let Some(w) = p.window {
                out.push_str(&format!(" window={w}"));
            }
            out.push('\n');
        }
        out
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> PolicyError {
    PolicyError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_number<T: FromStr>(line: usize, name: &str, value: &str) -> Result<T, PolicyError> {
    value
        .parse()
        .map_err(|_| parse_err(line, format!("`{name}` expects an integer, got `{value}`")))
}

fn parse_params(line: usize, tokens: &[&str]) -> Result<Params, PolicyError> {
    let mut p = Params::default();
    for token in tokens {
        let (name, value) = token
            .split_once('=')
            .ok_or_else(|| parse_err(line, format!("expected name=value, got `{token}`")))?;
        let name = normalize(name);
        let dup = |present: bool| {
            if present {
                Err(parse_err(line, format!("parameter `{name}` given twice")))
            } else {
                Ok(())
            }
        };
        match name.as_str() {
            "key" => {
                dup(p.key.is_some())?;
                p.key = Some(KeySource::Inline(value.as_bytes().to_vec()));
            }
            "key_hex" => {
                dup(p.key.is_some())?;
                let bytes = hex::decode(value)
                    .map_err(|_| parse_err(line, "key_hex is not valid hexadecimal"))?;
                p.key = Some(KeySource::Inline(bytes));
            }
            "key_env" => {
                dup(p.key.is_some())?;
                p.key = Some(KeySource::Env(value.to_string()));
            }
            "components" => {
                dup(p.components.is_some())?;
                p.components = Some(TimeComponents::parse_list(value).ok_or_else(|| {
                    parse_err(
                        line,
                        format!("unknown time component in `{value}` (year, month, day, hour, minute, second)"),
                    )
                })?);
            }
            "lower" => {
                dup(p.lower.is_some())?;
                p.lower = Some(parse_number(line, &name, value)?);
            }
            "upper" => {
                dup(p.upper.is_some())?;
                p.upper = Some(parse_number(line, &name, value)?);
            }
            "window" => {
                dup(p.window.is_some())?;
                p.window = Some(parse_number(line, &name, value)?);
            }
            _ => return Err(parse_err(line, format!("unknown parameter `{name}`"))),
        }
    }
    Ok(p)
}

/// Parses and validates a policy file.
pub fn parse_policy(text: &str) -> Result<Policy, PolicyError> {
    let mut policy = Policy::new();
    let mut seen: BTreeMap<FieldId, usize> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (lhs, rhs) = match content.split_once('=') {
            Some((l, r)) => (l.trim(), r.trim()),
            Option::None => (content, ""),
        };
        if lhs.contains(char::is_whitespace) {
            return Err(parse_err(
                line,
                format!("expected `field = option`, got `{content}`"),
            ));
        }

        if normalize(lhs) == "seed" {
            if policy.seed.is_some() {
                return Err(parse_err(line, "seed given twice"));
            }
            policy.seed = Some(parse_number(line, "seed", rhs)?);
            continue;
        }

        let field: FieldId = lhs
            .parse()
            .map_err(|_| parse_err(line, format!("unknown field `{lhs}`")))?;
        if let Some(first) = seen.insert(field, line) {
            return Err(parse_err(
                line,
                format!("{field} already configured on line {first}"),
            ));
        }

        let tokens: Vec<&str> = rhs.split_whitespace().collect();
        let (option, param_tokens) = match tokens.split_first() {
            Some((first, rest)) if !first.contains('=') => {
                let option: AnonOption = first
                    .parse()
                    .map_err(|_| parse_err(line, format!("unknown option `{first}`")))?;
                (option, rest)
            }
            _ => (default_option(field), &tokens[..]),
        };
        let params = parse_params(line, param_tokens)?;
        policy.set(FieldPolicy {
            field,
            option,
            params,
        });
    }
    policy.validated()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grouping_on_command() {
        let p = parse_policy("command_name = grouping").unwrap();
        assert_eq!(p.option(FieldId::CommandName), Grouping);
        assert_eq!(p.entries().count(), 1);
    }

    #[test]
    fn exit_code_rejects_keyed() {
        let err = parse_policy("exit_code = keyed_random key=abc").unwrap_err();
        assert_eq!(
            err,
            PolicyError::Invalid(vec![Violation::Matrix {
                field: FieldId::ExitCode,
                option: KeyedRandom
            }])
        );
    }

    #[test]
    fn empty_file_is_identity() {
        let p = parse_policy("").unwrap();
        assert!(p.is_identity());
        assert!(FieldId::ALL.iter().all(|&f| p.option(f) == None));
        assert!(parse_policy("# nothing\n\n   \n").unwrap().is_identity());
    }

    #[test]
    fn defaults() {
        assert_eq!(default_option(FieldId::CommandName), BlackMarker);
        assert_eq!(default_option(FieldId::BeginTime), TimeUnitAnnihilation);
        assert_eq!(default_option(FieldId::ExitCode), BlackMarker);
        let p = parse_policy("user_id\nbegin_time =\n").unwrap();
        assert_eq!(p.option(FieldId::UserId), BlackMarker);
        assert_eq!(p.option(FieldId::BeginTime), TimeUnitAnnihilation);
        assert_eq!(
            p.get(FieldId::BeginTime).unwrap().components(),
            TimeComponents::all()
        );
    }

    #[test]
    fn parameters_and_case() {
        let p = parse_policy(
            "SEED = 7\n\
             Begin-Time = Random_Time_Shift lower=-3600 upper=3600  # comment\n\
             user_id = keyed_random key_env=MY_KEY\n\
             group_id = keyed_random key_hex=00ff\n\
             memory_usage = grouping\n",
        )
        .unwrap();
        assert_eq!(p.seed, Some(7));
        let shift = p.get(FieldId::BeginTime).unwrap();
        assert_eq!(
            (shift.params.lower, shift.params.upper),
            (Some(-3600), Some(3600))
        );
        assert_eq!(
            p.get(FieldId::UserId).unwrap().params.key,
            Some(KeySource::Env("MY_KEY".into()))
        );
        assert_eq!(
            p.get(FieldId::GroupId).unwrap().params.key,
            Some(KeySource::Inline(vec![0, 0xff]))
        );
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("\n\nfoo = black_marker", 3),
            ("user_id = scramble", 1),
            ("user_id = keyed_random colour=red", 1),
            ("user_id = black_marker\nuser_id = pure_random", 2),
            ("seed = banana", 1),
            ("begin_time = enumeration window=-1", 1),
            ("begin_time = time_unit_annihilation components=week", 1),
            ("user id = black_marker", 1),
            ("user_id = keyed_random key=a key=b", 1),
        ];
        for (text, want) in cases {
            match parse_policy(text) {
                Err(PolicyError::Parse { line, .. }) => assert_eq!(line, want, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn missing_and_stray_parameters() {
        let cases = [
            "user_id = keyed_random",
            "user_id = keyed_random key=",
            "begin_time = random_time_shift lower=5",
            "begin_time = random_time_shift lower=5 upper=1",
            "begin_time = enumeration",
            "begin_time = enumeration window=0",
            "user_id = black_marker window=3",
        ];
        for text in cases {
            match parse_policy(text) {
                Err(PolicyError::Invalid(v)) => {
                    assert!(matches!(v[0], Violation::Config { .. }), "{text}: {v:?}")
                }
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn violations_are_collected() {
        let p = Policy::new()
            .with(FieldPolicy::new(FieldId::ExitCode, PureRandom))
            .with(FieldPolicy::new(FieldId::UserId, Enumeration))
            .with(FieldPolicy::new(FieldId::GroupId, KeyedRandom));
        assert_eq!(p.validate().len(), 3);
    }

    #[test]
    fn matrix_rows() {
        let count = |f: FieldId| f.options().len();
        assert_eq!(count(FieldId::CommandName), 4);
        assert_eq!(count(FieldId::BeginTime), 3);
        assert_eq!(count(FieldId::UserId), 3);
        assert_eq!(count(FieldId::ControllingTty), 3);
        assert_eq!(count(FieldId::ExitCode), 2);
        assert_eq!(count(FieldId::NumberOfSwaps), 4);
        for f in FieldId::ALL {
            assert!(f.allows(None));
            assert_eq!(f.options().contains(&Grouping), f.grouping_name().is_some());
        }
    }

    #[test]
    fn none_clears_a_field() {
        let p = parse_policy("user_id = none").unwrap();
        assert!(p.is_identity());
    }

    #[test]
    fn key_debug_is_redacted() {
        let k = KeySource::Inline(b"hunter2".to_vec());
        assert!(!format!("{k:?}").contains("hunter2"));
    }
}
