//! Key-free record of what a run did.
//!
//! The structured form is JSON:
//!
//! ```json
//! {
//!   "input": "in.pacct",
//!   "output": "out.pacct",
//!   "records_read": 10,
//!   "records_written": 10,
//!   "fields": [
//!     { "number": 1, "field": "command_name", "option": "grouping",
//!       "parameters": { "table": "command-class" } },
//!     ...
//!   ]
//! }
//! ```
//!
//! Every one of the sixteen fields is listed; unselected ones carry the
//! option `"none"`. Keys, seeds and the drawn time shift never appear.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::anon::CompDomain;
use crate::engine::Anonymizer;
use crate::policy::{AnonOption, FieldId, FieldPolicy, Policy};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSummary {
    pub number: u8,
    pub field: String,
    pub option: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub input: String,
    pub output: String,
    pub records_read: u64,
    pub records_written: u64,
    pub fields: Vec<FieldSummary>,
}

const WITHHELD: &str = "withheld";

fn public_parameters(entry: &FieldPolicy) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        out.insert(k.to_string(), v);
    };
    let field = entry.field;
    match entry.option {
        AnonOption::None | AnonOption::BlackMarker => {}
        AnonOption::PureRandom => {
            let range = match field {
                FieldId::CommandName => "COMM1..".to_string(),
                FieldId::AccountingFlag => "0..=255 masked 0x0b".to_string(),
                FieldId::UserId | FieldId::GroupId | FieldId::ControllingTty => {
                    "0..=65535".to_string()
                }
                f if f.is_time_usage() => {
                    format!(
                        "0..={}",
                        CompDomain::U16.value_at(CompDomain::U16.max_index())
                    )
                }
                _ => "comp_t".to_string(),
            };
            put("range", range);
        }
        AnonOption::KeyedRandom => put("key", WITHHELD.into()),
        AnonOption::Grouping => {
            put("table", field.grouping_name().unwrap_or("").into());
        }
        AnonOption::TimeUnitAnnihilation => put("components", entry.components().to_string()),
        AnonOption::RandomTimeShift => {
            put("lower", entry.params.lower.unwrap_or_default().to_string());
            put("upper", entry.params.upper.unwrap_or_default().to_string());
            put("offset", WITHHELD.into());
        }
        AnonOption::Enumeration => put(
            "window",
            entry.params.window.unwrap_or_default().to_string(),
        ),
    }
    out
}

fn field_summaries(policy: &Policy) -> Vec<FieldSummary> {
    FieldId::ALL
        .into_iter()
        .map(|field| {
            let (option, parameters) = match policy.get(field) {
                Some(entry) => (entry.option, public_parameters(entry)),
                None => (AnonOption::None, BTreeMap::new()),
            };
            FieldSummary {
                number: field.number(),
                field: field.name().to_string(),
                option: option.name().to_string(),
                parameters,
            }
        })
        .collect()
}

/// Summarizes a completed run.
pub fn build_summary(state: &Anonymizer, input: &str, output: &str) -> TaskSummary {
    TaskSummary {
        input: input.to_string(),
        output: output.to_string(),
        records_read: state.records_read(),
        records_written: state.records_written(),
        fields: field_summaries(state.policy()),
    }
}

impl TaskSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Task summary");
        let _ = writeln!(s, "  input:   {}", self.input);
        let _ = writeln!(s, "  output:  {}", self.output);
        let _ = writeln!(
            s,
            "  records: {} read, {} written",
            self.records_read, self.records_written
        );
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "  {:>2}  {:<20} {:<24} parameters",
            "#", "field", "option"
        );
        for f in &self.fields {
            let option = if f.option == AnonOption::None.name() {
                "no change"
            } else {
                &f.option
            };
            let params: Vec<String> = f
                .parameters
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            let _ = writeln!(
                s,
                "  {:>2}  {:<20} {:<24} {}",
                f.number,
                f.field,
                option,
                params.join(" ")
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "  Keys, seeds and the drawn time offset are not recorded."
        );
        s.lines().map(str::trim_end).collect::<Vec<_>>().join("\n") + "\n"
    }
}
