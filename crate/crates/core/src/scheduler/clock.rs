use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::graph::PageId;

struct Pending<E> {
    time: f64,
    page: PageId,
    kind: u8,
    seq: u64,
    event: E,
}

impl<E> Pending<E> {
    fn key(&self) -> (f64, PageId, u8, u64) {
        (self.time, self.page, self.kind, self.seq)
    }
}

impl<E> PartialEq for Pending<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<E> Eq for Pending<E> {}

impl<E> PartialOrd for Pending<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Pending<E> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        b.0.total_cmp(&a.0)
            .then(b.1.cmp(&a.1))
            .then(b.2.cmp(&a.2))
            .then(b.3.cmp(&a.3))
    }
}

/// Event queue over virtual time.
///
/// Events pop in `(time, page, kind)` order, insertion order last, and
/// `now` never moves backwards.
pub struct VirtualClock<E = ()> {
    now: f64,
    next_seq: u64,
    queue: BinaryHeap<Pending<E>>,
}

impl<E> VirtualClock<E> {
    pub fn new() -> Self {
        Self::starting_at(0.0)
    }

    pub fn starting_at(now: f64) -> Self {
        Self {
            now,
            next_seq: 0,
            queue: BinaryHeap::new(),
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Schedules `event` at `now + delay`. Negative or NaN delays are
    /// treated as zero.
    pub fn schedule(&mut self, delay: f64, page: PageId, kind: u8, event: E) {
        let delay = if delay > 0.0 { delay } else { 0.0 };
        self.queue.push(Pending {
            time: self.now + delay,
            page,
            kind,
            seq: self.next_seq,
            event,
        });
        self.next_seq += 1;
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.queue.peek().map(|p| p.time)
    }

    pub fn pop(&mut self) -> Option<(f64, E)> {
        let p = self.queue.pop()?;
        self.now = self.now.max(p.time);
        Some((self.now, p.event))
    }

    /// Pops every event stamped with the earliest pending time.
    pub fn pop_simultaneous(&mut self) -> Vec<E> {
        let Some(t) = self.peek_time() else {
            return Vec::new();
        };
        let mut out = Vec::new();
        while self.peek_time() == Some(t) {
            out.push(self.pop().expect("peeked").1);
        }
        out
    }

    pub fn is_idle(&self) -> bool {
        self.queue.is_empty()
    }
}

impl<E> Default for VirtualClock<E> {
    fn default() -> Self {
        Self::new()
    }
}
