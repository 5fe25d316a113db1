//! Per-page pull kernels.

use std::ops::AddAssign;
use std::sync::atomic::{AtomicU64, AtomicU8, Ordering};

use crate::algorithms::{VertexProgram, VertexValues};
use crate::graph::{CscPage, VertexId};
use crate::predictor::PredictorState;

const ATTEMPTED: u8 = 1;
const CHANGED: u8 = 2;

/// Per-vertex "attempted" / "changed" bits for the pass in flight, plus the
/// epoch of each vertex's latest change.
#[derive(Debug)]
pub struct PassFlags {
    bits: Vec<AtomicU8>,
    change_epoch: Vec<AtomicU64>,
}

impl PassFlags {
    pub fn new(num_vertices: usize) -> Self {
        Self {
            bits: (0..num_vertices).map(|_| AtomicU8::new(0)).collect(),
            change_epoch: (0..num_vertices).map(|_| AtomicU64::new(0)).collect(),
        }
    }

    #[inline]
    pub fn mark_attempted(&self, v: VertexId) {
        self.bits[v as usize].fetch_or(ATTEMPTED, Ordering::Relaxed);
    }

    /// Returns whether this is the first change of `v` in the pass.
    #[inline]
    pub fn mark_changed(&self, v: VertexId) -> bool {
        self.bits[v as usize].fetch_or(CHANGED, Ordering::Relaxed) & CHANGED == 0
    }

    /// [`mark_changed`](Self::mark_changed) by a kernel run of `epoch`.
    #[inline]
    pub fn mark_changed_at(&self, v: VertexId, epoch: u64) -> bool {
        self.change_epoch[v as usize].fetch_max(epoch, Ordering::Relaxed);
        self.mark_changed(v)
    }

    /// Epoch of the run that last changed `v`; 0 outside epoch-tracked runs.
    #[inline]
    pub fn change_epoch(&self, v: VertexId) -> u64 {
        self.change_epoch[v as usize].load(Ordering::Relaxed)
    }

    #[inline]
    pub fn attempted(&self, v: VertexId) -> bool {
        self.bits[v as usize].load(Ordering::Relaxed) & ATTEMPTED != 0
    }

    #[inline]
    pub fn changed(&self, v: VertexId) -> bool {
        self.bits[v as usize].load(Ordering::Relaxed) & CHANGED != 0
    }

    pub fn clear(&mut self) {
        for b in &mut self.bits {
            *b.get_mut() = 0;
        }
        for e in &mut self.change_epoch {
            *e.get_mut() = 0;
        }
    }

    /// Ascending ids of vertices marked changed.
    pub fn changed_vertices(&self) -> Vec<VertexId> {
        (0..self.bits.len() as VertexId)
            .filter(|&v| self.changed(v))
            .collect()
    }

    pub fn changed_count(&self) -> usize {
        (0..self.bits.len() as VertexId)
            .filter(|&v| self.changed(v))
            .count()
    }
}

/// Counters from one kernel invocation (or a sum of them).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KernelOutcome {
    pub attempts: u64,
    pub skipped: u64,
    pub valid_updates: u64,
    pub edge_reads: u64,
}

impl KernelOutcome {
    pub fn changed(&self) -> bool {
        self.valid_updates > 0
    }
}

impl AddAssign for KernelOutcome {
    fn add_assign(&mut self, o: Self) {
        self.attempts += o.attempts;
        self.skipped += o.skipped;
        self.valid_updates += o.valid_updates;
        self.edge_reads += o.edge_reads;
    }
}

pub struct PullContext<'a> {
    pub values: &'a VertexValues,
    pub program: &'a VertexProgram,
    pub predictor: &'a PredictorState,
    pub flags: &'a PassFlags,
    /// Ordering stamp of the kernel run. A run with a larger epoch starts
    /// after every run with a smaller one has finished.
    pub epoch: u64,
}

/// Pulls every destination of `page` the predictor does not skip.
///
/// Source values are read live, so earlier kernels of the same pass are
/// visible. Skipped destinations read no edges.
pub fn dense_pull_page(page: &CscPage, ctx: &PullContext<'_>) -> KernelOutcome {
    pull_page(page, ctx, true)
}

/// Same as [`dense_pull_page`] with the predictor ignored.
pub fn recovery_pull_page(page: &CscPage, ctx: &PullContext<'_>) -> KernelOutcome {
    pull_page(page, ctx, false)
}

fn pull_page(page: &CscPage, ctx: &PullContext<'_>, predict: bool) -> KernelOutcome {
    let mut out = KernelOutcome::default();
    let (values, program) = (ctx.values, ctx.program);
    for v in page.vertex_range() {
        let current = values.get(v);
        if predict && ctx.predictor.should_skip(v, current) {
            out.skipped += 1;
            continue;
        }
        out.attempts += 1;
        ctx.flags.mark_attempted(v);
        let sources = page.sources(v);
        out.edge_reads += sources.len() as u64;
        let mut best = current;
        match page.weights(v) {
            Some(ws) => {
                for (&u, &w) in sources.iter().zip(ws) {
                    let c = program.combine(values.get(u), w);
                    if program.better(c, best) {
                        best = c;
                    }
                }
            }
            None => {
                for &u in sources {
                    let c = program.combine(values.get(u), 1);
                    if program.better(c, best) {
                        best = c;
                    }
                }
            }
        }
        if program.better(best, current) {
            if let Some(old) = values.propose(v, best) {
                out.valid_updates += 1;
                ctx.flags.mark_changed_at(v, ctx.epoch);
                ctx.predictor.on_update(old, best);
            }
        }
    }
    out
}
