//! Virtual-time execution of a dense pass.

use crate::engine::kernel::KernelOutcome;
use crate::error::{Error, Result};
use crate::graph::{CscPage, PageSet};

use super::{
    fill_idle_slot, EventKind, IdleAction, IdleView, KernelState, PassPlan, ScheduleMode, Trace,
    TransferModel, VirtualClock, Window,
};

/// Totals of one scheduled dense pass.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DensePassReport {
    pub outcome: KernelOutcome,
    pub kernel_runs: u64,
    /// Runs beyond the plan: loaded-data repeats and idle-slot fills.
    pub reentries: u64,
    pub transfers: u64,
    pub bytes_transferred: u64,
    pub start_time: f64,
    pub end_time: f64,
}

impl DensePassReport {
    pub fn makespan(&self) -> f64 {
        self.end_time - self.start_time
    }
}

#[derive(Debug, Clone, Copy)]
enum Ev {
    XferDone(usize),
    KernelDone(Run, bool),
}

#[derive(Debug, Clone, Copy)]
struct Run {
    seq_idx: usize,
    /// Planned invocation this run belongs to; `None` for idle fills.
    inv: Option<usize>,
    repeat: u32,
}

const XFER_KIND: u8 = 0;
const KERNEL_KIND: u8 = 1;

/// Runs one dense pass over `pages` on a virtual clock starting at
/// `start_time`, calling `kernel` once per kernel run in admission order.
/// The kernel also receives the run's epoch: runs are numbered from 1 in
/// admission order.
///
/// The window keeps its contents for the next pass.
#[allow(clippy::too_many_arguments)]
pub fn schedule_dense_pass<K>(
    pages: &PageSet,
    mode: ScheduleMode,
    window: &mut Window,
    model: &TransferModel,
    start_time: f64,
    pass_index: usize,
    mut trace: Option<&mut Trace>,
    mut kernel: K,
) -> Result<DensePassReport>
where
    K: FnMut(&CscPage, u64) -> KernelOutcome,
{
    model.validate()?;
    let plan = PassPlan::new(
        mode,
        pages.len(),
        window.capacity(),
        &window.resident_pages(),
    )?;
    window.retain(&plan.seq[..plan.warm]);
    window.start_pass()?;

    let n = plan.len();
    let mut clock: VirtualClock<Ev> = VirtualClock::starting_at(start_time);
    let mut report = DensePassReport {
        start_time,
        end_time: start_time,
        ..Default::default()
    };
    let mut arrived = vec![false; n];
    arrived[..plan.warm].fill(true);
    let mut gap_used = vec![false; n];
    let mut next_xfer = plan.warm;
    let mut xfer_busy = false;
    let mut running: Option<Run> = None;
    let mut pending_repeat: Option<Run> = None;
    let mut next_inv = 0;
    let mut completed = 0;

    let log = |trace: &mut Option<&mut Trace>, t: f64, kind: EventKind, page: usize| {
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(t, kind, page, pass_index);
        }
    };

    loop {
        // decide at the current instant until nothing more can start
        loop {
            let mut progressed = false;

            let victim = plan.victim(next_xfer);
            let victim_free = victim.is_none_or(|v| {
                completed > plan.last_use[v] && running.is_none_or(|r| r.seq_idx != v)
            });
            let next_ready = next_xfer < n && victim_free && completed >= plan.barrier[next_xfer];
            let finished: Vec<usize> = if plan.fills_idle() && running.is_none() && xfer_busy {
                (0..n)
                    .filter(|&i| {
                        arrived[i]
                            && !gap_used[i]
                            && Some(i) != victim
                            && window.state(plan.seq[i]) == Some(KernelState::Done)
                    })
                    .map(|i| plan.seq[i])
                    .collect()
            } else {
                Vec::new()
            };
            let planned_ready = running.is_none()
                && (pending_repeat.is_some()
                    || (next_inv < plan.invocations.len() && arrived[plan.gate[next_inv]]));

            let start_transfer = if plan.fills_idle() {
                let view = IdleView {
                    transfer_idle: !xfer_busy,
                    compute_idle: running.is_none() && !planned_ready,
                    next_transfer_ready: next_ready,
                    finished: &finished,
                };
                match fill_idle_slot(&view) {
                    IdleAction::TransferNext => true,
                    IdleAction::Reentry(page) => {
                        let i = plan
                            .seq
                            .iter()
                            .position(|&p| p == page)
                            .expect("planned page");
                        gap_used[i] = true;
                        let run = Run {
                            seq_idx: i,
                            inv: None,
                            repeat: 0,
                        };
                        start_run(
                            &plan,
                            pages,
                            window,
                            model,
                            &mut clock,
                            &mut report,
                            run,
                            &mut kernel,
                        )?;
                        log(&mut trace, clock.now(), EventKind::Reentry, page);
                        running = Some(run);
                        progressed = true;
                        false
                    }
                    IdleAction::Wait => false,
                }
            } else {
                !xfer_busy && next_ready
            };

            if start_transfer {
                let j = next_xfer;
                let page = plan.seq[j];
                let slot = match victim {
                    Some(v) => window.slot_of(plan.seq[v]),
                    None => window.free_slot(),
                }
                .ok_or_else(|| Error::ContractViolation(format!("no slot for page {page}")))?;
                window.begin_transfer(slot, page)?;
                let bytes = pages.get(page).bytes();
                report.transfers += 1;
                report.bytes_transferred += bytes;
                log(&mut trace, clock.now(), EventKind::XferStart, page);
                clock.schedule(model.transfer_time(bytes), page, XFER_KIND, Ev::XferDone(j));
                xfer_busy = true;
                next_xfer += 1;
                gap_used.fill(false);
                progressed = true;
            }

            if planned_ready && running.is_none() {
                let run = match pending_repeat.take() {
                    Some(r) => r,
                    None => {
                        let inv = next_inv;
                        next_inv += 1;
                        Run {
                            seq_idx: plan.invocations[inv].seq_idx,
                            inv: Some(inv),
                            repeat: 0,
                        }
                    }
                };
                start_run(
                    &plan,
                    pages,
                    window,
                    model,
                    &mut clock,
                    &mut report,
                    run,
                    &mut kernel,
                )?;
                let kind = if run.repeat > 0 {
                    EventKind::Reentry
                } else {
                    EventKind::KernelStart
                };
                log(&mut trace, clock.now(), kind, plan.seq[run.seq_idx]);
                running = Some(run);
                progressed = true;
            }

            if !progressed {
                break;
            }
        }

        if clock.is_idle() {
            break;
        }
        for ev in clock.pop_simultaneous() {
            let now = clock.now();
            match ev {
                Ev::XferDone(j) => {
                    window.finish_transfer()?;
                    arrived[j] = true;
                    xfer_busy = false;
                    log(&mut trace, now, EventKind::XferEnd, plan.seq[j]);
                }
                Ev::KernelDone(run, changed) => {
                    window.finish_kernel(plan.seq[run.seq_idx])?;
                    log(&mut trace, now, EventKind::KernelEnd, plan.seq[run.seq_idx]);
                    running = None;
                    if run.inv.is_some() {
                        if changed && run.repeat < plan.max_repeats() {
                            pending_repeat = Some(Run {
                                repeat: run.repeat + 1,
                                ..run
                            });
                        } else {
                            completed += 1;
                        }
                    }
                }
            }
        }
    }

    if completed != plan.invocations.len() || next_xfer != n {
        return Err(Error::ContractViolation(format!(
            "dense pass stalled: {completed}/{} runs, {next_xfer}/{n} pages loaded",
            plan.invocations.len()
        )));
    }
    report.end_time = clock.now();
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn start_run<K>(
    plan: &PassPlan,
    pages: &PageSet,
    window: &mut Window,
    model: &TransferModel,
    clock: &mut VirtualClock<Ev>,
    report: &mut DensePassReport,
    run: Run,
    kernel: &mut K,
) -> Result<()>
where
    K: FnMut(&CscPage, u64) -> KernelOutcome,
{
    let page = plan.seq[run.seq_idx];
    window.start_kernel(page)?;
    let out = kernel(pages.get(page), report.kernel_runs + 1);
    report.outcome += out;
    report.kernel_runs += 1;
    if run.inv.is_none() || run.repeat > 0 {
        report.reentries += 1;
    }
    clock.schedule(
        model.kernel_time(out.edge_reads),
        page,
        KERNEL_KIND,
        Ev::KernelDone(run, out.changed()),
    );
    Ok(())
}

/// Duration covered by a pass's trace events.
pub fn simulate_pass_makespan(trace: &Trace, pass_index: usize) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for e in trace.pass(pass_index) {
        lo = lo.min(e.event_time);
        hi = hi.max(e.event_time);
    }
    if lo.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_csc_pages, EdgeList, PageId};

    /// `n` pages of one vertex each, every page with `deg` in-edges.
    fn uniform_pages(n: usize, deg: usize) -> PageSet {
        let mut edges = Vec::new();
        for v in 0..n as u32 {
            for k in 0..deg as u32 {
                edges.push(((v + k + 1) % n as u32, v));
            }
        }
        let el = EdgeList::unweighted(n, edges).unwrap();
        build_csc_pages(&el, 1).unwrap()
    }

    fn run(
        pages: &PageSet,
        mode: ScheduleMode,
        cap: usize,
        model: &TransferModel,
    ) -> (DensePassReport, Trace, Vec<PageId>) {
        let mut w = Window::new(cap).unwrap();
        let mut trace = Trace::new();
        let mut order = Vec::new();
        let rep = schedule_dense_pass(
            pages,
            mode,
            &mut w,
            model,
            0.0,
            0,
            Some(&mut trace),
            |p, _| {
                order.push(p.vertex_begin() as PageId);
                KernelOutcome {
                    attempts: 1,
                    edge_reads: p.num_edges() as u64,
                    ..Default::default()
                }
            },
        )
        .unwrap();
        (rep, trace, order)
    }

    fn model(bytes: f64, edges: f64) -> TransferModel {
        TransferModel {
            bytes_per_time_unit: bytes,
            edges_per_time_unit_per_worker: edges,
            host_edges_per_time_unit: 1.0,
            worker_count: 1,
        }
    }

    #[test]
    fn baseline_three_pages_in_order() {
        let pages = uniform_pages(3, 2);
        let (rep, trace, order) = run(&pages, ScheduleMode::Baseline, 2, &model(1.0, 1.0));
        assert_eq!(order, vec![0, 1, 2]);
        assert_eq!(rep.transfers, 3);
        assert_eq!(rep.kernel_runs, 3);
        assert_eq!(trace.count(EventKind::XferStart), 3);
        assert_eq!(trace.count(EventKind::KernelStart), 3);
    }

    #[test]
    fn five_page_pipeline_walkthrough() {
        let pages = uniform_pages(5, 2);
        let (_, trace, order) = run(&pages, ScheduleMode::Pipelined, 4, &model(1.0, 1.0));
        assert_eq!(order, vec![0, 1, 2, 1, 2, 3, 2, 3, 4]);
        // page 4 (E) is only transferred after set {0,1,2} ends and lands in page 0's slot
        let xfer_e = trace
            .events()
            .iter()
            .find(|e| e.event_kind == EventKind::XferStart && e.page_id == 4)
            .unwrap()
            .event_time;
        let third_end = trace
            .events()
            .iter()
            .filter(|e| e.event_kind == EventKind::KernelEnd)
            .nth(2)
            .unwrap()
            .event_time;
        assert!(xfer_e >= third_end);
        // D streams while {A,B,C} computes
        let xfer_d = trace
            .events()
            .iter()
            .find(|e| e.event_kind == EventKind::XferStart && e.page_id == 3)
            .unwrap()
            .event_time;
        let first_kernel = trace
            .events()
            .iter()
            .find(|e| e.event_kind == EventKind::KernelStart)
            .unwrap()
            .event_time;
        assert!(xfer_d <= first_kernel + 1e-9 || xfer_d < third_end);
    }

    #[test]
    fn infinitely_fast_kernels_are_transfer_bound() {
        let pages = uniform_pages(6, 3);
        let m = model(2.0, 1e15);
        let (rep, trace, _) = run(&pages, ScheduleMode::Baseline, 2, &m);
        let total: f64 = pages
            .pages()
            .iter()
            .map(|p| m.transfer_time(p.bytes()))
            .sum();
        assert!(
            (rep.makespan() - total).abs() / total < 1e-6,
            "{} vs {total}",
            rep.makespan()
        );
        assert!((simulate_pass_makespan(&trace, 0) - rep.makespan()).abs() < 1e-9);
    }

    #[test]
    fn slow_kernels_are_compute_bound_in_pipelined_mode() {
        let pages = uniform_pages(8, 4);
        let m = model(1e12, 0.01);
        let (rep, _, _) = run(&pages, ScheduleMode::Pipelined, 4, &m);
        let compute = m.kernel_time(rep.outcome.edge_reads);
        assert!((rep.makespan() - compute).abs() / compute < 1e-3);
    }

    #[test]
    fn more_compute_does_not_help_a_transfer_bound_baseline() {
        let pages = uniform_pages(10, 3);
        let slow = model(1.0, 4.0);
        let fast = model(1.0, 8.0);
        let (a, _, _) = run(&pages, ScheduleMode::Baseline, 4, &slow);
        let (b, _, _) = run(&pages, ScheduleMode::Baseline, 4, &fast);
        assert!((a.makespan() - b.makespan()).abs() / a.makespan() < 0.01);
    }

    #[test]
    fn warm_pages_skip_the_transfer() {
        let pages = uniform_pages(6, 1);
        let m = model(1.0, 1.0);
        let mut w = Window::new(2).unwrap();
        let first = schedule_dense_pass(
            &pages,
            ScheduleMode::Baseline,
            &mut w,
            &m,
            0.0,
            0,
            None,
            |_, _| KernelOutcome::default(),
        )
        .unwrap();
        assert_eq!(first.transfers, 6);
        assert_eq!(w.resident_pages(), vec![4, 5]);
        let mut order = Vec::new();
        let second = schedule_dense_pass(
            &pages,
            ScheduleMode::Baseline,
            &mut w,
            &m,
            first.end_time,
            1,
            None,
            |p, _| {
                order.push(p.vertex_begin());
                KernelOutcome::default()
            },
        )
        .unwrap();
        assert_eq!(second.transfers, 4);
        assert_eq!(order, vec![4, 5, 0, 1, 2, 3]);
    }

    #[test]
    fn reentry_repeats_while_changing() {
        let pages = uniform_pages(3, 1);
        let mut w = Window::new(2).unwrap();
        let mut runs = vec![0; 3];
        let rep = schedule_dense_pass(
            &pages,
            ScheduleMode::Reentry { mrt: 2 },
            &mut w,
            &model(1.0, 1.0),
            0.0,
            0,
            None,
            |p, _| {
                let id = p.vertex_begin() as usize;
                runs[id] += 1;
                // page 1 always changes, page 0 once
                let changed = id == 1 || (id == 0 && runs[0] == 1);
                KernelOutcome {
                    valid_updates: changed as u64,
                    ..Default::default()
                }
            },
        )
        .unwrap();
        assert_eq!(runs, vec![2, 3, 1]);
        assert_eq!(rep.reentries, 3);
    }

    #[test]
    fn fine_mode_fills_idle_compute_with_reentries() {
        let pages = uniform_pages(12, 8);
        // transfers much slower than kernels
        let (rep, trace, _) = run(&pages, ScheduleMode::PipelinedFine, 4, &model(0.5, 100.0));
        assert!(rep.reentries > 0);
        assert_eq!(trace.count(EventKind::Reentry) as u64, rep.reentries);
        let (coarse, _, _) = run(&pages, ScheduleMode::Pipelined, 4, &model(0.5, 100.0));
        assert_eq!(coarse.reentries, 0);
        assert!(rep.kernel_runs > coarse.kernel_runs);
    }

    #[test]
    fn no_slot_overwritten_while_running() {
        for mode in ScheduleMode::all() {
            let pages = uniform_pages(9, 5);
            let (_, trace, _) = run(&pages, mode, 4, &model(3.0, 0.7));
            let mut running = std::collections::HashSet::new();
            let mut resident = std::collections::HashSet::new();
            for e in trace.events() {
                match e.event_kind {
                    EventKind::KernelStart | EventKind::Reentry => {
                        assert!(resident.contains(&e.page_id), "{mode}: run of absent page");
                        running.insert(e.page_id);
                    }
                    EventKind::KernelEnd => {
                        running.remove(&e.page_id);
                    }
                    EventKind::XferStart => {
                        if resident.len() == 4 {
                            // the evicted page is the lowest-time resident not running
                            assert!(running.len() < resident.len());
                        }
                    }
                    EventKind::XferEnd => {
                        resident.insert(e.page_id);
                    }
                }
            }
        }
    }

    #[test]
    fn every_page_runs_in_every_mode() {
        for mode in ScheduleMode::all() {
            for cap in 2..6 {
                let pages = uniform_pages(7, 2);
                let (_, _, order) = run(&pages, mode, cap, &model(1.0, 1.0));
                for p in 0..7 {
                    assert!(order.contains(&p), "{mode} cap {cap} missed page {p}");
                }
            }
        }
    }

    #[test]
    fn identical_inputs_give_identical_traces() {
        let pages = uniform_pages(11, 3);
        for mode in ScheduleMode::all() {
            let a = run(&pages, mode, 4, &model(1.3, 0.9));
            let b = run(&pages, mode, 4, &model(1.3, 0.9));
            assert_eq!(a.1, b.1);
            assert_eq!(a.0, b.0);
        }
    }
}
