//! `lastcomm`-style one-line rendering of records.

use chrono::DateTime;

use crate::codec::{AcctFlags, AcctRecord};

/// Clock ticks per second assumed when converting CPU time.
pub const TICKS_PER_SECOND: u64 = 100;

/// Shown in the tty column for processes without a controlling terminal.
pub const NO_TTY: &str = "\u{2014}";

pub fn flag_letters(flag: AcctFlags) -> String {
    let letters: String = [
        (AcctFlags::SUPERUSER, 'S'),
        (AcctFlags::FORK, 'F'),
        (AcctFlags::CORE_DUMP, 'D'),
        (AcctFlags::SIGNALED, 'X'),
    ]
    .iter()
    .filter(|(bit, _)| flag.contains(*bit))
    .map(|(_, c)| *c)
    .collect();
    if letters.is_empty() {
        "-".into()
    } else {
        letters
    }
}

/// Terminal name from a Linux device number.
pub fn tty_name(tty: u16) -> String {
    let (major, minor) = (tty >> 8, tty & 0xff);
    match major {
        0 if minor == 0 => NO_TTY.to_string(),
        4 if minor < 64 => format!("tty{minor}"),
        136..=143 => format!("pts/{}", (major - 136) * 256 + minor),
        _ => format!("{major}:{minor}"),
    }
}

pub fn cpu_seconds(r: &AcctRecord) -> f64 {
    (r.utime.value() + r.stime.value()) as f64 / TICKS_PER_SECOND as f64
}

pub fn format_btime(btime: u32) -> String {
    DateTime::from_timestamp(i64::from(btime), 0)
        .expect("u32 epoch is in range")
        .format("%a %b %e %H:%M:%S %Y")
        .to_string()
}

pub fn format_record(r: &AcctRecord) -> String {
    format!(
        "{:<16} {:<4} {:>5} {:<8} {:>8.2} secs {}",
        r.comm_lossy(),
        flag_letters(r.flag),
        r.uid,
        tty_name(r.tty),
        cpu_seconds(r),
        format_btime(r.btime)
    )
}
