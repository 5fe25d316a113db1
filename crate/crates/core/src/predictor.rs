//! Skip prediction for dense pull passes.
//!
//! Two schemes decide whether a destination's pull can be skipped:
//!
//! * **strong**: closed-form thresholds refreshed at pass boundaries. A vertex
//!   whose value is under the threshold can no longer improve.
//!   - BFS: `value <= k`, `k` = completed passes.
//!   - CC: `value < s`, `s` = smallest label whose holder count moved in the
//!     last pass.
//!   - SSSP: `value < l`, `l` = smallest value written in the last pass.
//! * **weak**: a six-state automaton over each vertex's recent pull outcomes.
//!   States 0, 1 and 5 attempt; 2, 3 and 4 skip. Skips are heuristic, so the
//!   engine confirms termination with a status-blind pull over every page
//!   ([`recovery_scan`]).

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU32, AtomicU8, Ordering};

use serde::{Deserialize, Serialize};

use crate::algorithms::{ProgramKind, Value, VertexProgram, VertexValues, INF};
use crate::engine::kernel::{recovery_pull_page, PassFlags, PullContext};
use crate::error::{Error, Result};
use crate::graph::{PageSet, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorMode {
    #[default]
    Off,
    Strong,
    Weak,
}

impl PredictorMode {
    pub const ALL: [PredictorMode; 3] = [
        PredictorMode::Off,
        PredictorMode::Strong,
        PredictorMode::Weak,
    ];
}

impl fmt::Display for PredictorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PredictorMode::Off => "off",
            PredictorMode::Strong => "strong",
            PredictorMode::Weak => "weak",
        })
    }
}

impl FromStr for PredictorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "off" | "none" => Ok(PredictorMode::Off),
            "strong" => Ok(PredictorMode::Strong),
            "weak" => Ok(PredictorMode::Weak),
            other => Err(Error::InvalidConfig(format!("unknown predictor {other:?}"))),
        }
    }
}

// ---------------------------------------------------------------------------
// weak automaton

/// Update-history state of one vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum WeakState {
    /// Initial state, and where every valid update returns to.
    Active = 0,
    /// Probe after dormancy.
    Probe = 1,
    /// Second dormant pass.
    DormantLate = 2,
    /// First dormant pass, entered after two failures in a row.
    Dormant = 3,
    /// Penalty pass after a failed probe.
    Penalty = 4,
    /// One failure seen.
    Candidate = 5,
}

impl WeakState {
    pub const ALL: [WeakState; 6] = [
        WeakState::Active,
        WeakState::Probe,
        WeakState::DormantLate,
        WeakState::Dormant,
        WeakState::Penalty,
        WeakState::Candidate,
    ];

    pub fn from_u8(raw: u8) -> Result<Self> {
        WeakState::ALL
            .get(raw as usize)
            .copied()
            .ok_or_else(|| Error::ContractViolation(format!("weak state {raw} outside 0..=5")))
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }
}

/// Result of one dense pass for one vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Changed,
    Unchanged,
    Skipped,
}

pub fn weak_should_attempt(state: WeakState) -> bool {
    matches!(
        state,
        WeakState::Active | WeakState::Probe | WeakState::Candidate
    )
}

pub fn weak_transition(state: WeakState, outcome: Outcome) -> Result<WeakState> {
    use Outcome::*;
    use WeakState::*;
    Ok(match (state, outcome) {
        (Active | Candidate | Probe, Changed) => Active,
        (Active, Unchanged) => Candidate,
        (Candidate, Unchanged) => Dormant,
        (Probe, Unchanged) => Penalty,
        (Dormant, Skipped) => DormantLate,
        (DormantLate, Skipped) => Probe,
        (Penalty, Skipped) => Dormant,
        (s, o) => {
            return Err(Error::ContractViolation(format!(
                "no weak transition from state {} on {o:?}",
                s.as_u8()
            )))
        }
    })
}

// ---------------------------------------------------------------------------
// strong thresholds

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrongThresholds {
    /// Completed passes, `k`.
    pub passes: u64,
    /// Smallest label whose holder count changed in the last pass, `s`.
    pub min_unstable_label: Value,
    /// Smallest value written in the last pass, `l`.
    pub min_changed_value: Value,
}

impl StrongThresholds {
    /// Before any pass nothing is provably converged except what `value <= 0`
    /// admits for BFS (the source).
    pub fn initial() -> Self {
        Self {
            passes: 0,
            min_unstable_label: 0,
            min_changed_value: 0,
        }
    }
}

impl Default for StrongThresholds {
    fn default() -> Self {
        Self::initial()
    }
}

#[inline]
pub fn strong_converged(kind: ProgramKind, value: Value, th: &StrongThresholds) -> bool {
    match kind {
        ProgramKind::Bfs => value <= th.passes,
        // Label 0 is the smallest id in the graph and can never improve.
        ProgramKind::Cc => value == 0 || value < th.min_unstable_label,
        ProgramKind::Sssp => value < th.min_changed_value,
    }
}

/// Number of vertices holding each CC label.
#[derive(Debug)]
pub struct LabelHistogram {
    counts: Vec<AtomicU32>,
    prev: Vec<u32>,
}

impl LabelHistogram {
    /// Histogram of the CC initial state: every vertex holds its own id.
    pub fn new(num_vertices: usize) -> Self {
        Self {
            counts: (0..num_vertices).map(|_| AtomicU32::new(1)).collect(),
            prev: vec![1; num_vertices],
        }
    }

    pub fn from_labels(labels: &[Value]) -> Self {
        let mut counts = vec![0u32; labels.len()];
        for &l in labels {
            counts[l as usize] += 1;
        }
        Self {
            counts: counts.iter().map(|&c| AtomicU32::new(c)).collect(),
            prev: counts,
        }
    }

    #[inline]
    pub fn relabel(&self, old: Value, new: Value) {
        self.counts[old as usize].fetch_sub(1, Ordering::Relaxed);
        self.counts[new as usize].fetch_add(1, Ordering::Relaxed);
    }

    pub fn count(&self, label: Value) -> u32 {
        self.counts[label as usize].load(Ordering::Relaxed)
    }

    pub fn total(&self) -> u64 {
        self.counts
            .iter()
            .map(|c| c.load(Ordering::Relaxed) as u64)
            .sum()
    }

    /// Smallest label whose count differs from the last snapshot, then
    /// snapshots. `INF` when nothing moved.
    pub fn take_min_changed(&mut self) -> Value {
        let mut min = INF;
        for (label, (cur, prev)) in self.counts.iter().zip(self.prev.iter_mut()).enumerate() {
            let cur = cur.load(Ordering::Relaxed);
            if cur != *prev {
                if min == INF {
                    min = label as Value;
                }
                *prev = cur;
            }
        }
        min
    }
}

/// Advances the thresholds past one completed pass.
pub fn refresh_thresholds(
    previous: &StrongThresholds,
    changed_values: impl IntoIterator<Item = Value>,
    histogram: Option<&mut LabelHistogram>,
) -> StrongThresholds {
    StrongThresholds {
        passes: previous.passes + 1,
        min_unstable_label: histogram.map_or(INF, LabelHistogram::take_min_changed),
        min_changed_value: changed_values.into_iter().min().unwrap_or(INF),
    }
}

// ---------------------------------------------------------------------------
// update history

/// Per-vertex sequence of pull attempt outcomes (`true` = value changed).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HistoryLog {
    per_vertex: Vec<Vec<bool>>,
}

impl HistoryLog {
    pub fn new(num_vertices: usize) -> Self {
        Self {
            per_vertex: vec![Vec::new(); num_vertices],
        }
    }

    pub fn from_histories(per_vertex: Vec<Vec<bool>>) -> Self {
        Self { per_vertex }
    }

    pub fn record(&mut self, v: VertexId, changed: bool) {
        self.per_vertex[v as usize].push(changed);
    }

    pub fn history(&self, v: VertexId) -> &[bool] {
        &self.per_vertex[v as usize]
    }

    pub fn is_empty(&self) -> bool {
        self.per_vertex.iter().all(Vec::is_empty)
    }
}

/// Positions `i` where a change is followed by two failed attempts, paired
/// with whether the vertex never changed again after them.
pub fn prediction_events(history: &[bool]) -> Vec<(usize, bool)> {
    let last_change = history.iter().rposition(|&c| c);
    history
        .windows(3)
        .enumerate()
        .filter(|(_, w)| w == &[true, false, false])
        .map(|(i, _)| (i, last_change.is_none_or(|lc| lc <= i)))
        .collect()
}

/// Fraction of "changed, then failed twice" events after which the vertex
/// never changed again.
pub fn prediction_accuracy(log: &HistoryLog) -> Result<f64> {
    let (mut events, mut correct) = (0u64, 0u64);
    for h in &log.per_vertex {
        for (_, ok) in prediction_events(h) {
            events += 1;
            correct += ok as u64;
        }
    }
    if events == 0 {
        return Err(Error::UndefinedRatio(
            "history log holds no change-then-two-failures event".into(),
        ));
    }
    Ok(correct as f64 / events as f64)
}

// ---------------------------------------------------------------------------
// runtime state

/// Per-run predictor state shared by pull kernels.
#[derive(Debug)]
pub struct PredictorState {
    mode: PredictorMode,
    kind: ProgramKind,
    statuses: Vec<AtomicU8>,
    thresholds: StrongThresholds,
    histogram: Option<LabelHistogram>,
}

impl PredictorState {
    pub fn new(mode: PredictorMode, kind: ProgramKind, num_vertices: usize) -> Self {
        let statuses = if mode == PredictorMode::Weak {
            (0..num_vertices).map(|_| AtomicU8::new(0)).collect()
        } else {
            Vec::new()
        };
        let histogram = (mode == PredictorMode::Strong && kind == ProgramKind::Cc)
            .then(|| LabelHistogram::new(num_vertices));
        Self {
            mode,
            kind,
            statuses,
            thresholds: StrongThresholds::initial(),
            histogram,
        }
    }

    pub fn mode(&self) -> PredictorMode {
        self.mode
    }

    pub fn thresholds(&self) -> &StrongThresholds {
        &self.thresholds
    }

    pub fn histogram(&self) -> Option<&LabelHistogram> {
        self.histogram.as_ref()
    }

    /// Whether the pull of `v` (currently holding `value`) is skipped.
    #[inline]
    pub fn should_skip(&self, v: VertexId, value: Value) -> bool {
        match self.mode {
            PredictorMode::Off => false,
            PredictorMode::Strong => strong_converged(self.kind, value, &self.thresholds),
            PredictorMode::Weak => {
                let s = self.statuses[v as usize].load(Ordering::Relaxed);
                !matches!(s, 0 | 1 | 5)
            }
        }
    }

    /// Bookkeeping for a stored improvement `old -> new` of any vertex.
    #[inline]
    pub fn on_update(&self, old: Value, new: Value) {
        if let Some(h) = &self.histogram {
            h.relabel(old, new);
        }
    }

    pub fn status(&self, v: VertexId) -> Option<WeakState> {
        self.statuses
            .get(v as usize)
            .map(|s| WeakState::from_u8(s.load(Ordering::Relaxed)).expect("status word in range"))
    }

    /// Counts of vertices per weak state, or `None` outside weak mode.
    pub fn status_counts(&self) -> Option<[u64; 6]> {
        (self.mode == PredictorMode::Weak).then(|| {
            let mut counts = [0u64; 6];
            for s in &self.statuses {
                counts[s.load(Ordering::Relaxed) as usize] += 1;
            }
            counts
        })
    }

    /// Drives every vertex's automaton by its outcome in the dense pass that
    /// just finished.
    pub fn advance_weak(&mut self, flags: &PassFlags) -> Result<()> {
        if self.mode != PredictorMode::Weak {
            return Ok(());
        }
        for (v, s) in self.statuses.iter_mut().enumerate() {
            let state = WeakState::from_u8(*s.get_mut())?;
            let v = v as VertexId;
            let outcome = if !weak_should_attempt(state) {
                Outcome::Skipped
            } else if flags.changed(v) {
                Outcome::Changed
            } else {
                Outcome::Unchanged
            };
            *s.get_mut() = weak_transition(state, outcome)?.as_u8();
        }
        Ok(())
    }

    /// Sends every vertex that changed outside a predicted dense pass back
    /// to the initial state.
    pub fn reset_changed(&mut self, flags: &PassFlags) {
        if self.mode != PredictorMode::Weak {
            return;
        }
        for (v, s) in self.statuses.iter_mut().enumerate() {
            if flags.changed(v as VertexId) {
                *s.get_mut() = WeakState::Active.as_u8();
            }
        }
    }

    /// Refreshes strong thresholds at a pass boundary.
    pub fn end_pass(&mut self, changed_values: impl IntoIterator<Item = Value>) {
        if self.mode == PredictorMode::Strong {
            self.thresholds =
                refresh_thresholds(&self.thresholds, changed_values, self.histogram.as_mut());
        }
    }
}

/// Status-blind pull over every page. Returns the vertices whose value
/// changed; their weak state is reset to 0.
///
/// The engine runs the same kernel through the scheduler so the pass is
/// charged for its transfers; this entry point is the schedule-free form.
pub fn recovery_scan(
    values: &VertexValues,
    pages: &PageSet,
    program: &VertexProgram,
    predictor: &mut PredictorState,
) -> Vec<VertexId> {
    if predictor.mode != PredictorMode::Weak {
        return Vec::new();
    }
    let flags = PassFlags::new(values.len());
    {
        let ctx = PullContext {
            values,
            program,
            predictor,
            flags: &flags,
            epoch: 1,
        };
        for page in pages.pages() {
            recovery_pull_page(page, &ctx);
        }
    }
    predictor.reset_changed(&flags);
    flags.changed_vertices()
}
