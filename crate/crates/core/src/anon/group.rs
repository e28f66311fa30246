use super::AnonError;

/// One subset of a [`GroupTable`]: `lo..=hi` (unbounded above when `hi`
/// is `None`) replaced by `label`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Group {
    pub lo: u64,
    pub hi: Option<u64>,
    pub label: u64,
}

impl Group {
    pub const fn new(lo: u64, hi: u64, label: u64) -> Self {
        Group {
            lo,
            hi: Some(hi),
            label,
        }
    }

    pub const fn from(lo: u64, label: u64) -> Self {
        Group {
            lo,
            hi: None,
            label,
        }
    }

    pub fn contains(&self, value: u64) -> bool {
        value >= self.lo && self.hi.is_none_or(|hi| value <= hi)
    }
}

/// Ordered partition of an integer domain into labelled subsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupTable {
    name: &'static str,
    groups: Vec<Group>,
}

impl GroupTable {
    /// Builds a table, checking that subsets are sorted, non-empty and
    /// pairwise disjoint.
    pub fn new(name: &'static str, groups: Vec<Group>) -> Result<Self, AnonError> {
        for g in &groups {
            if g.hi.is_some_and(|hi| hi < g.lo) {
                return Err(AnonError::BadPartition(format!(
                    "{name}: empty subset starting at {}",
                    g.lo
                )));
            }
        }
        for pair in groups.windows(2) {
            match pair[0].hi {
                Some(hi) if hi < pair[1].lo => {}
                _ => {
                    return Err(AnonError::BadPartition(format!(
                        "{name}: subsets starting at {} and {} overlap or are out of order",
                        pair[0].lo, pair[1].lo
                    )))
                }
            }
        }
        Ok(GroupTable { name, groups })
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    /// True when the subsets cover every value in `lo..=hi` with no gap.
    pub fn covers(&self, lo: u64, hi: u64) -> bool {
        let mut next = lo;
        for g in &self.groups {
            if g.lo > next {
                return false;
            }
            match g.hi {
                None => return true,
                Some(end) if end >= hi => return true,
                Some(end) => next = next.max(end + 1),
            }
        }
        false
    }

    /// Subsets whose label lies outside the subset itself.
    pub fn foreign_labels(&self) -> Vec<Group> {
        self.groups
            .iter()
            .filter(|g| !g.contains(g.label))
            .copied()
            .collect()
    }

    pub fn label(&self, value: u64) -> Result<u64, AnonError> {
        // groups are sorted, so the candidate is the last one starting at or below value
        let idx = self.groups.partition_point(|g| g.lo <= value);
        match idx.checked_sub(1).map(|i| self.groups[i]) {
            Some(g) if g.contains(value) => Ok(g.label),
            _ => Err(AnonError::OutsideDomain {
                table: self.name,
                value,
            }),
        }
    }
}

pub fn group_map(value: u64, table: &GroupTable) -> Result<u64, AnonError> {
    table.label(value)
}

/// Minor/major pagefault groups.
pub fn pagefault_table() -> GroupTable {
    GroupTable::new(
        "pagefault",
        vec![
            Group::new(0, 0, 0),
            Group::new(1, 999, 500),
            Group::from(1000, 1000),
        ],
    )
    .unwrap()
}

/// Memory usage groups. The label of the last subset (2000) lies outside
/// it (2001 and above); kept as defined.
pub fn memory_table() -> GroupTable {
    GroupTable::new(
        "memory",
        vec![
            Group::new(0, 0, 0),
            Group::new(1, 999, 500),
            Group::new(1000, 2000, 1500),
            Group::from(2001, 2000),
        ],
    )
    .unwrap()
}

/// Zero stays zero, anything else becomes one.
pub fn zero_one_group(value: u64) -> u64 {
    u64::from(value != 0)
}

pub fn flag_popcount(flag: u8) -> u8 {
    flag.count_ones() as u8
}

/// Functional command classes, in table order. Anything not listed is
/// `Miscellaneous`.
pub const COMMAND_CLASSES: &[(&str, &[&str])] = &[
    (
        "File",
        &[
            "pwd", "cd", "ls", "rm", "mv", "cp", "chmod", "mkdir", "rmdir", "find", "file", "in",
            "locate",
        ],
    ),
    (
        "Connect",
        &[
            "ssh", "sftp", "telnet", "ftp", "pine", "elm", "logout", "lynx", "wget", "mail",
        ],
    ),
    (
        "Edit",
        &[
            "vi", "pico", "vim", "emacs", "gvim", "xemacs", "jove", "nedit", "dtpad",
        ],
    ),
    (
        "Program",
        &[
            "gcc", "make", "lex", "yacc", "lint", "ctrace", "gdb", "gcj", "ocaml", "gmake",
        ],
    ),
    (
        "Text",
        &["grep", "cat", "wc", "sort", "more", "less", "echo"],
    ),
    ("Status", &["date", "who", "finger", "ps", "talk", "top"]),
];

pub const MISC_CLASS: &str = "Miscellaneous";

pub fn command_group(command: &[u8]) -> &'static str {
    COMMAND_CLASSES
        .iter()
        .find(|(_, members)| members.iter().any(|m| m.as_bytes() == command))
        .map(|(label, _)| *label)
        .unwrap_or(MISC_CLASS)
}
