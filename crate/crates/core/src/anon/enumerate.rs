use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::codec::AcctRecord;

struct Pending {
    btime: u32,
    arrival: u64,
    record: AcctRecord,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.btime, self.arrival).cmp(&(other.btime, other.arrival))
    }
}

/// Sliding-window local sort that replaces begin times with their rank.
///
/// Up to `window_size` records are held back; each further record pushes
/// out the earliest buffered one (ties by arrival order). A log whose
/// records are never more than `window_size` places out of order comes
/// out fully sorted.
pub struct EnumerationWindow {
    window_size: usize,
    buffer: BinaryHeap<Reverse<Pending>>,
    arrivals: u64,
    next_sequence: u32,
}

impl EnumerationWindow {
    pub fn new(window_size: usize) -> Self {
        assert!(window_size >= 1, "window size must be positive");
        EnumerationWindow {
            window_size,
            buffer: BinaryHeap::with_capacity(window_size + 1),
            arrivals: 0,
            next_sequence: 1,
        }
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    pub fn push(&mut self, record: AcctRecord) -> Option<AcctRecord> {
        self.buffer.push(Reverse(Pending {
            btime: record.btime,
            arrival: self.arrivals,
            record,
        }));
        self.arrivals += 1;
        if self.buffer.len() > self.window_size {
            self.emit()
        } else {
            None
        }
    }

    fn emit(&mut self) -> Option<AcctRecord> {
        let Reverse(p) = self.buffer.pop()?;
        let mut record = p.record;
        record.btime = self.next_sequence;
        self.next_sequence += 1;
        Some(record)
    }

    /// Drains the buffer in order at end of input.
    pub fn flush(&mut self) -> Vec<AcctRecord> {
        let mut out = Vec::with_capacity(self.buffer.len());
        while let Some(r) = self.emit() {
            out.push(r);
        }
        out
    }
}

pub fn enumerate_push(record: AcctRecord, window: &mut EnumerationWindow) -> Option<AcctRecord> {
    window.push(record)
}

pub fn enumerate_flush(window: &mut EnumerationWindow) -> Vec<AcctRecord> {
    window.flush()
}
