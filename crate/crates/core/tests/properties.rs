use std::collections::BTreeSet;

use proptest::prelude::*;

use pagestream::algorithms::{ProgramKind, Value, VertexProgram};
use pagestream::bench::{cell_config, reference_solve};
use pagestream::engine::{run, PreparedGraph};
use pagestream::graph::EdgeList;
use pagestream::metrics::PassKind;
use pagestream::predictor::{
    weak_should_attempt, weak_transition, LabelHistogram, Outcome, PredictorMode, WeakState,
};
use pagestream::scheduler::{ClockMode, EventKind, ScheduleMode};

fn graph() -> impl Strategy<Value = EdgeList> {
    (1usize..48).prop_flat_map(|n| {
        prop::collection::vec((0..n as u32, 0..n as u32, 1u32..20), 0..160).prop_map(move |e| {
            EdgeList::new(
                n,
                e.iter().map(|&(s, d, _)| (s, d)).collect(),
                Some(e.iter().map(|&(_, _, w)| w).collect()),
            )
            .unwrap()
        })
    })
}

fn kind() -> impl Strategy<Value = ProgramKind> {
    prop::sample::select(ProgramKind::ALL.to_vec())
}

fn mode() -> impl Strategy<Value = ScheduleMode> {
    prop_oneof![
        Just(ScheduleMode::Baseline),
        (1u32..4).prop_map(|mrt| ScheduleMode::Reentry { mrt }),
        (1u32..4).prop_map(|reps| ScheduleMode::DoubleBuffer { reps }),
        Just(ScheduleMode::Pipelined),
        Just(ScheduleMode::PipelinedFine),
    ]
}

fn predictor() -> impl Strategy<Value = PredictorMode> {
    prop::sample::select(PredictorMode::ALL.to_vec())
}

fn solve(
    g: &EdgeList,
    kind: ProgramKind,
    src: u32,
    c: &pagestream::engine::EngineConfig,
) -> (Vec<Value>, pagestream::metrics::MetricsReport) {
    let p = VertexProgram::for_kind(kind, src, g.num_vertices(), true).unwrap();
    let prepared = PreparedGraph::new(g, kind, c.page_vertex_capacity).unwrap();
    run(&prepared, &p, c).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(192))]

    #[test]
    fn engine_matches_oracle(
        g in graph(), kind in kind(), mode in mode(), pred in predictor(),
        window in 2usize..6, workers in 1usize..9, cap in 1usize..8, src_pick in any::<u32>(),
    ) {
        let src = src_pick % g.num_vertices() as u32;
        let c = cell_config(mode, pred, workers, window, Some(cap), ClockMode::Virtual);
        let (values, m) = solve(&g, kind, src, &c);
        prop_assert_eq!(values, reference_solve(&g, kind, src).unwrap());
        prop_assert_eq!(m.passes, m.pass_records.len());
        prop_assert_eq!(m.passes, m.sparse_passes + m.dense_passes + m.recovery_passes);
    }

    // Fine mode is left out: its idle fills depend on kernel durations, so
    // a shorter kernel can buy extra reentries.
    #[test]
    fn strong_prediction_never_adds_attempts(
        g in graph(), kind in kind(), mode in mode().prop_filter("fixed schedule", |m| *m != ScheduleMode::PipelinedFine),
        window in 2usize..6, cap in 1usize..8,
    ) {
        let off = cell_config(mode, PredictorMode::Off, 4, window, Some(cap), ClockMode::Virtual);
        let strong = cell_config(mode, PredictorMode::Strong, 4, window, Some(cap), ClockMode::Virtual);
        let (v0, m0) = solve(&g, kind, 0, &off);
        let (v1, m1) = solve(&g, kind, 0, &strong);
        prop_assert_eq!(v0, v1);
        prop_assert!(m1.update_attempts <= m0.update_attempts, "{} > {}", m1.update_attempts, m0.update_attempts);
    }

    #[test]
    fn virtual_runs_repeat_exactly(
        g in graph(), kind in kind(), mode in mode(), pred in predictor(), window in 2usize..6, cap in 1usize..8,
    ) {
        let mut c = cell_config(mode, pred, 4, window, Some(cap), ClockMode::Virtual);
        c.record_trace = true;
        let (va, a) = solve(&g, kind, 0, &c);
        let (vb, b) = solve(&g, kind, 0, &c);
        prop_assert_eq!(va, vb);
        prop_assert_eq!(&a.pass_records, &b.pass_records);
        prop_assert_eq!(a.virtual_makespan, b.virtual_makespan);
        prop_assert_eq!(a.trace.as_ref().unwrap().events(), b.trace.as_ref().unwrap().events());
    }

    #[test]
    fn every_page_runs_in_every_dense_pass(
        g in graph(), kind in kind(), mode in mode(), pred in predictor(), window in 2usize..6, cap in 1usize..8,
    ) {
        let mut c = cell_config(mode, pred, 4, window, Some(cap), ClockMode::Virtual);
        c.record_trace = true;
        let prepared = PreparedGraph::new(&g, kind, Some(cap)).unwrap();
        let p = VertexProgram::for_kind(kind, 0, g.num_vertices(), true).unwrap();
        let (_, m) = run(&prepared, &p, &c).unwrap();
        let trace = m.trace.unwrap();
        let mut last = f64::NEG_INFINITY;
        for e in trace.events() {
            prop_assert!(e.event_time >= last);
            last = e.event_time;
        }
        let starts = trace.count(EventKind::KernelStart) + trace.count(EventKind::Reentry);
        prop_assert_eq!(starts, trace.count(EventKind::KernelEnd));
        prop_assert_eq!(trace.count(EventKind::XferStart), trace.count(EventKind::XferEnd));
        for rec in m.pass_records.iter().filter(|r| r.kind != PassKind::Sparse) {
            let ran: BTreeSet<_> = trace
                .pass(rec.index)
                .filter(|e| e.event_kind == EventKind::KernelStart)
                .map(|e| e.page_id)
                .collect();
            prop_assert_eq!(ran.len(), prepared.pages().len());
            prop_assert!(rec.transfers <= prepared.pages().len() as u64);
        }
    }

    #[test]
    fn histogram_rows_partition_the_vertices(g in graph(), mode in mode(), cap in 1usize..8) {
        let mut c = cell_config(mode, PredictorMode::Weak, 4, 3, Some(cap), ClockMode::Virtual);
        c.record_history = true;
        let (_, m) = solve(&g, ProgramKind::Sssp, 0, &c);
        let rows = pagestream::bench::status_histogram_report(&m).unwrap();
        prop_assert_eq!(rows[0].s0, g.num_vertices() as u64);
        for r in rows {
            prop_assert_eq!(r.attempted + r.skipped, g.num_vertices() as u64);
            prop_assert!(r.real <= r.attempted || r.kind != PassKind::Dense);
        }
    }

    #[test]
    fn weak_automaton_never_skips_more_than_three_times(outcomes in prop::collection::vec(any::<bool>(), 1..200)) {
        let mut s = WeakState::Active;
        let mut skipped_run = 0;
        for changed in outcomes {
            s = if weak_should_attempt(s) {
                skipped_run = 0;
                weak_transition(s, if changed { Outcome::Changed } else { Outcome::Unchanged }).unwrap()
            } else {
                skipped_run += 1;
                prop_assert!(skipped_run <= 3);
                weak_transition(s, Outcome::Skipped).unwrap()
            };
        }
    }

    #[test]
    fn label_histogram_conserves_vertices(n in 1usize..64, moves in prop::collection::vec((any::<u32>(), any::<u32>()), 0..100)) {
        let mut labels: Vec<Value> = (0..n as Value).collect();
        let h = LabelHistogram::new(n);
        for (v, to) in moves {
            let v = v as usize % n;
            let to = to as Value % (labels[v] + 1);
            h.relabel(labels[v], to);
            labels[v] = to;
            prop_assert_eq!(h.total(), n as u64);
        }
        for l in 0..n as Value {
            prop_assert_eq!(h.count(l) as usize, labels.iter().filter(|&&x| x == l).count());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn wall_clock_matches_oracle(
        g in graph(), kind in kind(), mode in mode(), pred in predictor(),
        window in 2usize..6, workers in 1usize..5, cap in 1usize..8,
    ) {
        let c = cell_config(mode, pred, workers, window, Some(cap), ClockMode::Wall);
        let (values, m) = solve(&g, kind, 0, &c);
        prop_assert_eq!(values, reference_solve(&g, kind, 0).unwrap());
        prop_assert_eq!(m.virtual_makespan, 0.0);
    }
}
