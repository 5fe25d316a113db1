//! Density-switched execution: host push passes for small frontiers, paged
//! dense pull passes through the window scheduler for large ones.

pub mod kernel;

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use crate::algorithms::{ProgramKind, Value, VertexProgram, VertexValues, INF};
use crate::error::{Error, Result};
use crate::graph::{
    build_csc_pages, build_csr, symmetrize, CscPage, CsrGraph, EdgeList, PageSet, VertexId,
};
use crate::metrics::{MetricsReport, PassKind, PassRecord};
use crate::par::Workers;
use crate::predictor::{HistoryLog, PredictorMode, PredictorState};
use crate::scheduler::wall::{run_dense_pass_wall, WallWindow};
use crate::scheduler::{
    schedule_dense_pass, ClockMode, DensePassReport, ScheduleMode, Trace, TransferModel, Window,
};

use kernel::{dense_pull_page, recovery_pull_page, KernelOutcome, PassFlags, PullContext};

/// Which pass kinds the engine may pick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Direction {
    #[default]
    Switched,
    SparseOnly,
    DenseOnly,
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    /// Destinations per page; `None` picks `ceil(|V| / 32)`.
    pub page_vertex_capacity: Option<usize>,
    pub density_threshold_fraction: f64,
    pub predictor: PredictorMode,
    pub mode: ScheduleMode,
    /// Window capacity in pages.
    pub window: usize,
    /// Cost model; also carries the worker count.
    pub model: TransferModel,
    pub clock: ClockMode,
    pub direction: Direction,
    pub record_trace: bool,
    pub record_history: bool,
}

pub const DEFAULT_PAGES_PER_GRAPH: usize = 32;

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            page_vertex_capacity: None,
            density_threshold_fraction: 0.05,
            predictor: PredictorMode::Off,
            mode: ScheduleMode::Baseline,
            window: 8,
            model: TransferModel::default(),
            clock: ClockMode::Virtual,
            direction: Direction::Switched,
            record_trace: false,
            record_history: false,
        }
    }
}

impl EngineConfig {
    pub fn worker_count(&self) -> usize {
        self.model.worker_count
    }

    pub fn with_workers(mut self, n: usize) -> Self {
        self.model.worker_count = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density_threshold_fraction > 0.0 && self.density_threshold_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "density_threshold_fraction must be in (0, 1], got {}",
                self.density_threshold_fraction
            )));
        }
        if self.page_vertex_capacity == Some(0) {
            return Err(Error::InvalidConfig(
                "page_vertex_capacity must be >= 1".into(),
            ));
        }
        if self.window < 2 {
            return Err(Error::InvalidConfig(format!(
                "window must hold >= 2 pages, got {}",
                self.window
            )));
        }
        self.mode.validate(self.window)?;
        self.model.validate()
    }
}

/// Graph in both layouts, symmetrized when the algorithm needs it.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    csr: CsrGraph,
    pages: PageSet,
    symmetric: bool,
}

impl PreparedGraph {
    pub fn new(
        edges: &EdgeList,
        kind: ProgramKind,
        page_vertex_capacity: Option<usize>,
    ) -> Result<Self> {
        if kind.symmetric_input() {
            Self::build(&symmetrize(edges), true, page_vertex_capacity)
        } else {
            Self::build(edges, false, page_vertex_capacity)
        }
    }

    fn build(edges: &EdgeList, symmetric: bool, cap: Option<usize>) -> Result<Self> {
        let cap = cap.unwrap_or_else(|| {
            edges
                .num_vertices()
                .div_ceil(DEFAULT_PAGES_PER_GRAPH)
                .max(1)
        });
        Ok(Self {
            csr: build_csr(edges)?,
            pages: build_csc_pages(edges, cap)?,
            symmetric,
        })
    }

    pub fn csr(&self) -> &CsrGraph {
        &self.csr
    }

    pub fn pages(&self) -> &PageSet {
        &self.pages
    }

    pub fn num_vertices(&self) -> usize {
        self.csr.num_vertices()
    }

    pub fn num_edges(&self) -> usize {
        self.csr.num_edges()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_weighted(&self) -> bool {
        self.csr.is_weighted()
    }
}

/// Active vertex set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frontier {
    /// Ascending, distinct ids.
    Sparse(Vec<VertexId>),
    Dense(Vec<bool>),
}

impl Frontier {
    pub fn from_ids(mut ids: Vec<VertexId>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Frontier::Sparse(ids)
    }

    pub fn active_count(&self) -> usize {
        match self {
            Frontier::Sparse(ids) => ids.len(),
            Frontier::Dense(bits) => bits.iter().filter(|&&b| b).count(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.active_count() == 0
    }

    pub fn active_out_edges(&self, csr: &CsrGraph) -> usize {
        match self {
            Frontier::Sparse(ids) => ids.iter().map(|&v| csr.out_degree(v)).sum(),
            Frontier::Dense(bits) => (0..bits.len())
                .filter(|&v| bits[v])
                .map(|v| csr.out_degree(v as VertexId))
                .sum(),
        }
    }

    pub fn to_sparse(&self) -> Vec<VertexId> {
        match self {
            Frontier::Sparse(ids) => ids.clone(),
            Frontier::Dense(bits) => (0..bits.len() as VertexId)
                .filter(|&v| bits[v as usize])
                .collect(),
        }
    }

    pub fn to_dense(&self, num_vertices: usize) -> Vec<bool> {
        match self {
            Frontier::Sparse(ids) => {
                let mut bits = vec![false; num_vertices];
                for &v in ids {
                    bits[v as usize] = true;
                }
                bits
            }
            Frontier::Dense(bits) => bits.clone(),
        }
    }

    /// Union with `other`, as a sparse list.
    pub fn union(&self, other: &[VertexId]) -> Self {
        let mut ids = self.to_sparse();
        ids.extend_from_slice(other);
        Self::from_ids(ids)
    }
}

/// Dense pull iff the frontier's out-edges exceed `fraction * |E|`.
pub fn density_switch(active_out_edges: usize, num_edges: usize, fraction: f64) -> PassKind {
    if active_out_edges as f64 > fraction * num_edges as f64 {
        PassKind::Dense
    } else {
        PassKind::Sparse
    }
}

/// Host push from every frontier vertex, using source values as they were
/// when the pass began. Marks changed destinations in `flags`; the returned
/// `valid_updates` counts distinct changed vertices.
pub fn sparse_push_pass(
    csr: &CsrGraph,
    values: &VertexValues,
    frontier: &[VertexId],
    program: &VertexProgram,
    predictor: &PredictorState,
    flags: &PassFlags,
    workers: &Workers,
) -> KernelOutcome {
    let snapshot: Vec<Value> = frontier.iter().map(|&u| values.get(u)).collect();
    let parts = workers.map_chunks(frontier.len(), 64, |range| {
        let mut out = KernelOutcome::default();
        for i in range {
            let (u, su) = (frontier[i], snapshot[i]);
            let targets = csr.neighbors(u);
            out.attempts += targets.len() as u64;
            out.edge_reads += targets.len() as u64;
            if su == INF {
                continue;
            }
            let weights = csr.weights(u);
            for (k, &v) in targets.iter().enumerate() {
                let w = weights.map_or(1, |ws| ws[k]);
                let proposal = program.combine(su, w);
                if let Some(old) = values.propose(v, proposal) {
                    predictor.on_update(old, proposal);
                    if flags.mark_changed(v) {
                        out.valid_updates += 1;
                    }
                }
            }
        }
        out
    });
    let mut total = KernelOutcome::default();
    for p in parts {
        total += p;
    }
    total
}

/// Changed vertices whose final value this pass may not have been pulled by
/// every out-neighbour. A change is consumed when each out-neighbour's page
/// ran at a later epoch than the change.
fn unconsumed_changes(
    csr: &CsrGraph,
    pages: &PageSet,
    flags: &PassFlags,
    page_seen: &[AtomicU64],
    changed: Vec<VertexId>,
) -> Vec<VertexId> {
    changed
        .into_iter()
        .filter(|&u| {
            let at = flags.change_epoch(u);
            csr.neighbors(u)
                .iter()
                .any(|&v| page_seen[pages.page_of(v)].load(Ordering::Relaxed) <= at)
        })
        .collect()
}

/// Whether no edge of `csr` can improve any of `values`.
pub fn is_fixpoint(csr: &CsrGraph, program: &VertexProgram, values: &[Value]) -> bool {
    csr.iter_edges().all(|(u, v, w)| {
        !program.better(program.combine(values[u as usize], w), values[v as usize])
    })
}

enum Backend {
    Virtual(Window),
    Wall(WallWindow),
}

/// Runs `program` to its fixpoint.
pub fn run(
    graph: &PreparedGraph,
    program: &VertexProgram,
    config: &EngineConfig,
) -> Result<(Vec<Value>, MetricsReport)> {
    config.validate()?;
    let kind = program.kind();
    if kind.symmetric_input() && !graph.is_symmetric() {
        return Err(Error::InvalidConfig(format!(
            "{kind} needs a graph prepared for {kind}"
        )));
    }
    if kind.needs_weights() && !graph.is_weighted() {
        return Err(Error::InvalidConfig(format!("{kind} needs edge weights")));
    }
    let n = graph.num_vertices();
    if let Some(s) = program.source() {
        if s as usize >= n {
            return Err(Error::InvalidConfig(format!("source {s} outside [0, {n})")));
        }
    }

    let csr = graph.csr();
    let pages = graph.pages();
    let workers = match config.clock {
        ClockMode::Wall => Workers::new(config.worker_count())?,
        // kernel bodies run in admission order; the model accounts for workers
        ClockMode::Virtual => Workers::sequential(),
    };
    let mut backend = match config.clock {
        ClockMode::Virtual => Backend::Virtual(Window::new(config.window)?),
        ClockMode::Wall => Backend::Wall(WallWindow::new(config.window)?),
    };

    let values = VertexValues::init(program, n);
    let mut predictor = PredictorState::new(config.predictor, kind, n);
    let mut flags = PassFlags::new(n);
    // latest epoch at which each page was pulled in the current pass
    let mut page_seen: Vec<AtomicU64> = (0..pages.len()).map(|_| AtomicU64::new(0)).collect();
    let mut history = config.record_history.then(|| HistoryLog::new(n));
    let mut trace = config.record_trace.then(Trace::new);
    let mut report = MetricsReport::default();
    let mut frontier = Frontier::from_ids(program.initial_frontier(n));
    let mut needs_recovery = false;
    let mut last = None;
    let mut now = 0.0f64;
    let started = Instant::now();
    let max_passes = 4 * n + 64;

    loop {
        if report.passes > max_passes {
            return Err(Error::ContractViolation(format!(
                "no fixpoint after {max_passes} passes"
            )));
        }
        let kind = if frontier.is_empty() {
            if !needs_recovery {
                break;
            }
            PassKind::Recovery
        } else {
            let chosen = match config.direction {
                Direction::SparseOnly => PassKind::Sparse,
                Direction::DenseOnly => PassKind::Dense,
                Direction::Switched => density_switch(
                    frontier.active_out_edges(csr),
                    csr.num_edges(),
                    config.density_threshold_fraction,
                ),
            };
            if chosen == PassKind::Sparse && last == Some(PassKind::Dense) && needs_recovery {
                PassKind::Recovery
            } else {
                chosen
            }
        };

        let index = report.passes;
        let status_counts = predictor.status_counts();
        flags.clear();
        let frontier_size = frontier.active_count();
        let (outcome, dense) = match kind {
            PassKind::Sparse => {
                let ids = frontier.to_sparse();
                let t = Instant::now();
                let out =
                    sparse_push_pass(csr, &values, &ids, program, &predictor, &flags, &workers);
                let dur = match config.clock {
                    ClockMode::Virtual => config.model.host_time(out.edge_reads),
                    ClockMode::Wall => t.elapsed().as_nanos() as f64,
                };
                (
                    out,
                    DensePassReport {
                        outcome: out,
                        start_time: now,
                        end_time: now + dur,
                        ..Default::default()
                    },
                )
            }
            PassKind::Dense | PassKind::Recovery => {
                for s in &mut page_seen {
                    *s.get_mut() = 0;
                }
                let (values, predictor, flags, page_seen) =
                    (&values, &predictor, &flags, &page_seen);
                let pull = |page: &CscPage, epoch: u64| {
                    page_seen[pages.page_of(page.vertex_begin())]
                        .fetch_max(epoch, Ordering::Relaxed);
                    let ctx = PullContext {
                        values,
                        program,
                        predictor,
                        flags,
                        epoch,
                    };
                    if kind == PassKind::Dense {
                        dense_pull_page(page, &ctx)
                    } else {
                        recovery_pull_page(page, &ctx)
                    }
                };
                let rep = match &mut backend {
                    Backend::Virtual(window) => schedule_dense_pass(
                        pages,
                        config.mode,
                        window,
                        &config.model,
                        now,
                        index,
                        trace.as_mut(),
                        pull,
                    )?,
                    Backend::Wall(window) => {
                        let (rep, tr) = run_dense_pass_wall(
                            pages,
                            config.mode,
                            window,
                            &workers,
                            now,
                            index,
                            config.record_trace,
                            pull,
                        )?;
                        if let (Some(all), Some(tr)) = (trace.as_mut(), tr) {
                            all.extend(tr);
                        }
                        rep
                    }
                };
                (rep.outcome, rep)
            }
        };
        now = dense.end_time;

        let changed = flags.changed_vertices();
        match kind {
            PassKind::Dense => {
                predictor.advance_weak(&flags)?;
                if predictor.mode() == PredictorMode::Weak && outcome.skipped > 0 {
                    needs_recovery = true;
                }
            }
            PassKind::Recovery => {
                predictor.reset_changed(&flags);
                needs_recovery = false;
            }
            // Only dense outcomes feed the DFA.
            PassKind::Sparse => {}
        }
        if let Some(h) = history.as_mut() {
            if kind == PassKind::Dense {
                for v in 0..n as VertexId {
                    if flags.attempted(v) {
                        h.record(v, flags.changed(v));
                    }
                }
            } else {
                for &v in &changed {
                    h.record(v, true);
                }
            }
        }
        predictor.end_pass(changed.iter().map(|&v| values.get(v)));

        report.push(PassRecord {
            index,
            kind,
            frontier_size,
            attempts: outcome.attempts,
            skipped: outcome.skipped,
            valid_updates: outcome.valid_updates,
            changed_vertices: changed.len() as u64,
            edge_reads: outcome.edge_reads,
            kernel_runs: dense.kernel_runs,
            reentries: dense.reentries,
            transfers: dense.transfers,
            bytes_transferred: dense.bytes_transferred,
            duration: dense.makespan(),
            status_counts,
        });

        let unseen = if kind == PassKind::Sparse {
            changed
        } else {
            unconsumed_changes(csr, pages, &flags, &page_seen, changed)
        };
        frontier = if kind == PassKind::Recovery {
            frontier.union(&unseen)
        } else {
            Frontier::from_ids(unseen)
        };
        last = Some(kind);
    }

    match config.clock {
        ClockMode::Virtual => report.virtual_makespan = now,
        ClockMode::Wall => report.wall_time = started.elapsed().as_nanos() as f64,
    }
    report.trace = trace;
    report.history = history;
    Ok((values.to_vec(), report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> EngineConfig {
        EngineConfig::default()
    }

    #[test]
    fn switch_boundary_is_strict() {
        assert_eq!(density_switch(5, 100, 0.05), PassKind::Sparse);
        assert_eq!(density_switch(6, 100, 0.05), PassKind::Dense);
        assert_eq!(density_switch(100, 100, 0.05), PassKind::Dense);
        assert_eq!(density_switch(1, 1_000_000, 0.05), PassKind::Sparse);
    }

    #[test]
    fn frontier_representations_agree() {
        let el = EdgeList::unweighted(4, vec![(0, 1), (0, 2), (3, 0)]).unwrap();
        let csr = build_csr(&el).unwrap();
        let f = Frontier::from_ids(vec![3, 0, 0]);
        let d = Frontier::Dense(f.to_dense(4));
        assert_eq!(f.active_count(), 2);
        assert_eq!(d.active_count(), 2);
        assert_eq!(f.active_out_edges(&csr), 3);
        assert_eq!(d.active_out_edges(&csr), 3);
        assert_eq!(d.to_sparse(), vec![0, 3]);
        assert_eq!(f.union(&[2, 3]).to_sparse(), vec![0, 2, 3]);
    }

    fn push_once(
        el: &EdgeList,
        program: &VertexProgram,
        start: &[Value],
        frontier: &[VertexId],
    ) -> (Vec<Value>, Vec<VertexId>, KernelOutcome) {
        let csr = build_csr(el).unwrap();
        let values = VertexValues::from_values(start);
        let pred = PredictorState::new(PredictorMode::Off, program.kind(), start.len());
        let flags = PassFlags::new(start.len());
        let out = sparse_push_pass(
            &csr,
            &values,
            frontier,
            program,
            &pred,
            &flags,
            &Workers::sequential(),
        );
        (values.to_vec(), flags.changed_vertices(), out)
    }

    #[test]
    fn push_one_hop() {
        let el = EdgeList::unweighted(3, vec![(0, 1), (1, 2)]).unwrap();
        let p = VertexProgram::bfs(0, 3).unwrap();
        let (vals, next, _) = push_once(&el, &p, &[0, INF, INF], &[0]);
        assert_eq!(next, vec![1]);
        assert_eq!(vals[1], 1);
        let (_, next, out) = push_once(&el, &p, &[0, INF, INF], &[]);
        assert!(next.is_empty());
        assert_eq!(out.attempts, 0);
    }

    #[test]
    fn push_cc_pair() {
        let el = symmetrize(&EdgeList::unweighted(2, vec![(0, 1)]).unwrap());
        let (vals, next, _) = push_once(&el, &VertexProgram::cc(), &[0, 1], &[0, 1]);
        assert_eq!(vals, vec![0, 0]);
        assert_eq!(next, vec![1]);
    }

    #[test]
    fn two_vertex_bfs() {
        let el = EdgeList::unweighted(2, vec![(0, 1)]).unwrap();
        let g = PreparedGraph::new(&el, ProgramKind::Bfs, None).unwrap();
        let (vals, m) = run(&g, &VertexProgram::bfs(0, 2).unwrap(), &cfg()).unwrap();
        assert_eq!(vals, vec![0, 1]);
        assert!(m.passes <= 2);
    }

    #[test]
    fn edgeless_cc_is_one_quiet_pass() {
        let el = EdgeList::unweighted(5, vec![]).unwrap();
        let g = PreparedGraph::new(&el, ProgramKind::Cc, None).unwrap();
        let (vals, m) = run(&g, &VertexProgram::cc(), &cfg()).unwrap();
        assert_eq!(vals, vec![0, 1, 2, 3, 4]);
        assert_eq!(m.passes, 1);
        assert_eq!(m.valid_updates, 0);
    }

    #[test]
    fn rejects_bad_configs() {
        let el = EdgeList::unweighted(2, vec![(0, 1)]).unwrap();
        let g = PreparedGraph::new(&el, ProgramKind::Bfs, None).unwrap();
        let p = VertexProgram::bfs(0, 2).unwrap();
        for bad in [
            EngineConfig { window: 1, ..cfg() },
            EngineConfig {
                density_threshold_fraction: 0.0,
                ..cfg()
            },
            EngineConfig {
                density_threshold_fraction: 1.5,
                ..cfg()
            },
            cfg().with_workers(0),
        ] {
            assert!(matches!(run(&g, &p, &bad), Err(Error::InvalidConfig(_))));
        }
        assert!(
            run(&g, &VertexProgram::cc(), &cfg()).is_err(),
            "not symmetrized"
        );
    }

    #[test]
    fn every_direction_reaches_the_same_fixpoint() {
        let el = EdgeList::new(
            6,
            vec![(0, 1), (1, 2), (2, 3), (0, 3), (3, 4), (4, 1), (5, 5)],
            Some(vec![2, 2, 2, 9, 1, 1, 3]),
        )
        .unwrap();
        for kind in ProgramKind::ALL {
            let g = PreparedGraph::new(&el, kind, Some(2)).unwrap();
            let p = VertexProgram::for_kind(kind, 0, 6, true).unwrap();
            let mut outs = Vec::new();
            for direction in [
                Direction::Switched,
                Direction::SparseOnly,
                Direction::DenseOnly,
            ] {
                for predictor in PredictorMode::ALL {
                    let c = EngineConfig {
                        direction,
                        predictor,
                        window: 2,
                        ..cfg()
                    };
                    let (vals, _) = run(&g, &p, &c).unwrap();
                    assert!(
                        is_fixpoint(g.csr(), &p, &vals),
                        "{kind} {direction:?} {predictor}"
                    );
                    outs.push(vals);
                }
            }
            assert!(outs.windows(2).all(|w| w[0] == w[1]), "{kind}");
        }
    }
}
