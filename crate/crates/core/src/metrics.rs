//! Run and per-pass counters.

use std::fmt;

use serde::Serialize;

use crate::predictor::HistoryLog;
use crate::scheduler::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PassKind {
    Sparse,
    Dense,
    /// Status-blind full pull run before trusting a weak-mode fixpoint.
    Recovery,
}

impl fmt::Display for PassKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PassKind::Sparse => "sparse",
            PassKind::Dense => "dense",
            PassKind::Recovery => "recovery",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassRecord {
    pub index: usize,
    pub kind: PassKind,
    pub frontier_size: usize,
    pub attempts: u64,
    pub skipped: u64,
    pub valid_updates: u64,
    pub changed_vertices: u64,
    pub edge_reads: u64,
    pub kernel_runs: u64,
    pub reentries: u64,
    pub transfers: u64,
    pub bytes_transferred: u64,
    /// Virtual or wall duration of the pass, nanoseconds.
    pub duration: f64,
    /// Vertices per weak state when the pass started.
    #[serde(skip)]
    pub status_counts: Option<[u64; 6]>,
}

#[derive(Debug, Clone, Default)]
pub struct MetricsReport {
    pub passes: usize,
    pub sparse_passes: usize,
    pub dense_passes: usize,
    pub recovery_passes: usize,
    pub pages_transferred: u64,
    pub bytes_transferred: u64,
    pub update_attempts: u64,
    pub valid_updates: u64,
    pub skipped_vertices: u64,
    pub edge_reads: u64,
    pub kernel_runs: u64,
    pub reentries: u64,
    /// Virtual-clock duration of the run, nanoseconds. Zero under the wall
    /// clock.
    pub virtual_makespan: f64,
    /// Measured duration, nanoseconds. Zero under the virtual clock.
    pub wall_time: f64,
    pub pass_records: Vec<PassRecord>,
    pub trace: Option<Trace>,
    pub history: Option<HistoryLog>,
}

impl MetricsReport {
    /// Giga edges traversed per second over the run's own clock. Only edges
    /// actually read count, so skipped vertices contribute nothing.
    pub fn gteps(&self) -> f64 {
        let t = if self.wall_time > 0.0 {
            self.wall_time
        } else {
            self.virtual_makespan
        };
        if t > 0.0 {
            self.edge_reads as f64 / t
        } else {
            0.0
        }
    }

    pub(crate) fn push(&mut self, rec: PassRecord) {
        self.passes += 1;
        match rec.kind {
            PassKind::Sparse => self.sparse_passes += 1,
            PassKind::Dense => self.dense_passes += 1,
            PassKind::Recovery => self.recovery_passes += 1,
        }
        self.pages_transferred += rec.transfers;
        self.bytes_transferred += rec.bytes_transferred;
        self.update_attempts += rec.attempts;
        self.valid_updates += rec.valid_updates;
        self.skipped_vertices += rec.skipped;
        self.edge_reads += rec.edge_reads;
        self.kernel_runs += rec.kernel_runs;
        self.reentries += rec.reentries;
        self.pass_records.push(rec);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gteps_uses_edge_reads() {
        let mut m = MetricsReport {
            virtual_makespan: 2000.0,
            ..Default::default()
        };
        assert_eq!(m.gteps(), 0.0);
        m.push(PassRecord {
            index: 0,
            kind: PassKind::Dense,
            frontier_size: 1,
            attempts: 5,
            skipped: 1,
            valid_updates: 2,
            changed_vertices: 2,
            edge_reads: 1000,
            kernel_runs: 1,
            reentries: 0,
            transfers: 1,
            bytes_transferred: 64,
            duration: 2000.0,
            status_counts: None,
        });
        assert_eq!(m.gteps(), 0.5);
        assert_eq!(m.dense_passes, 1);
        assert_eq!(m.skipped_vertices, 1);
    }
}
