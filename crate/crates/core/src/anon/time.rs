use std::fmt;

use bitflags::bitflags;
use chrono::{DateTime, Datelike, NaiveDate, Timelike};
use rand::Rng;

use super::AnonError;

bitflags! {
    /// Calendar components of a timestamp.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct TimeComponents: u8 {
        const YEAR = 1 << 0;
        const MONTH = 1 << 1;
        const DAY = 1 << 2;
        const HOUR = 1 << 3;
        const MINUTE = 1 << 4;
        const SECOND = 1 << 5;
    }
}

const COMPONENT_NAMES: [(TimeComponents, &str); 6] = [
    (TimeComponents::YEAR, "year"),
    (TimeComponents::MONTH, "month"),
    (TimeComponents::DAY, "day"),
    (TimeComponents::HOUR, "hour"),
    (TimeComponents::MINUTE, "minute"),
    (TimeComponents::SECOND, "second"),
];

impl TimeComponents {
    /// Components removed by truncating at `unit`: the unit and every
    /// finer one.
    pub fn truncate_at(unit: TimeComponents) -> TimeComponents {
        let mut out = TimeComponents::empty();
        let mut on = false;
        for (c, _) in COMPONENT_NAMES {
            on |= c == unit;
            if on {
                out |= c;
            }
        }
        out
    }

    pub fn parse_name(name: &str) -> Option<TimeComponents> {
        let name = name.trim().to_ascii_lowercase();
        let name = name.strip_suffix('s').unwrap_or(&name);
        COMPONENT_NAMES
            .iter()
            .find(|(_, n)| *n == name)
            .map(|(c, _)| *c)
    }

    /// Parses a comma-separated component list such as `minute,second`.
    pub fn parse_list(list: &str) -> Option<TimeComponents> {
        list.split(',')
            .filter(|s| !s.trim().is_empty())
            .try_fold(TimeComponents::empty(), |acc, s| {
                Self::parse_name(s).map(|c| acc | c)
            })
    }

    pub fn names(self) -> Vec<&'static str> {
        COMPONENT_NAMES
            .iter()
            .filter(|(c, _)| self.contains(*c))
            .map(|(_, n)| *n)
            .collect()
    }
}

impl fmt::Display for TimeComponents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.names().join(","))
    }
}

const EPOCH_YEAR: i32 = 1970;

fn days_in_month(year: i32, month: u32) -> u32 {
    let (ny, nm) = if month == 12 {
        (year + 1, 1)
    } else {
        (year, month + 1)
    };
    NaiveDate::from_ymd_opt(ny, nm, 1)
        .and_then(|d| d.pred_opt())
        .map(|d| d.day())
        .unwrap_or(28)
}

/// Resets the selected components of a UTC epoch timestamp to their
/// minimum: year to 1970, month and day to 1, time-of-day parts to 0.
///
/// A day that no longer exists after the year or month changes (Feb 29
/// moved to a non-leap year) is clamped to the month's last day.
pub fn annihilate_time(epoch: u32, components: TimeComponents) -> u32 {
    if components.is_empty() {
        return epoch;
    }
    let t = DateTime::from_timestamp(i64::from(epoch), 0)
        .expect("u32 epoch is in range")
        .naive_utc();
    fn pick<T>(set: TimeComponents, c: TimeComponents, zero: T, v: T) -> T {
        if set.contains(c) {
            zero
        } else {
            v
        }
    }
    let year = pick(components, TimeComponents::YEAR, EPOCH_YEAR, t.year());
    let month = pick(components, TimeComponents::MONTH, 1, t.month());
    let day = pick(components, TimeComponents::DAY, 1, t.day()).min(days_in_month(year, month));
    let hour = pick(components, TimeComponents::HOUR, 0, t.hour());
    let minute = pick(components, TimeComponents::MINUTE, 0, t.minute());
    let second = pick(components, TimeComponents::SECOND, 0, t.second());

    let out = NaiveDate::from_ymd_opt(year, month, day)
        .and_then(|d| d.and_hms_opt(hour, minute, second))
        .expect("components are valid")
        .and_utc()
        .timestamp();
    // year >= 1970 and never later than the input, so this fits
    u32::try_from(out).expect("annihilated time fits in u32")
}

/// A single time offset drawn once per run from `lower..=upper`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeShiftConfig {
    pub lower: i64,
    pub upper: i64,
    delta: i64,
}

impl TimeShiftConfig {
    pub fn draw<R: Rng + ?Sized>(lower: i64, upper: i64, rng: &mut R) -> Result<Self, AnonError> {
        if lower > upper {
            return Err(AnonError::BadShiftBounds { lower, upper });
        }
        Ok(TimeShiftConfig {
            lower,
            upper,
            delta: rng.random_range(lower..=upper),
        })
    }

    /// Fixed offset; `delta` must lie within the bounds.
    pub fn with_delta(lower: i64, upper: i64, delta: i64) -> Result<Self, AnonError> {
        if lower > upper || !(lower..=upper).contains(&delta) {
            return Err(AnonError::BadShiftBounds { lower, upper });
        }
        Ok(TimeShiftConfig {
            lower,
            upper,
            delta,
        })
    }

    pub fn delta(&self) -> i64 {
        self.delta
    }
}

/// `epoch + delta`, or `None` when the result leaves the u32 range.
pub fn random_shift(epoch: u32, config: &TimeShiftConfig) -> Option<u32> {
    u32::try_from(i64::from(epoch).checked_add(config.delta)?).ok()
}
