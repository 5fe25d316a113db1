//! Wall-clock execution of a dense pass on real threads.
//!
//! A transfer agent copies pages into window slots while the caller's
//! thread runs kernel sets on the worker pool. Both follow the same
//! [`PassPlan`] as the virtual backend. Without the `parallel` feature, or
//! with one worker, transfers and kernels alternate on the calling thread.

use std::sync::{Arc, Condvar, Mutex};
use std::time::Instant;

use crate::engine::kernel::KernelOutcome;
use crate::error::{Error, Result};
use crate::graph::{CscPage, PageSet};
use crate::par::Workers;

use super::{DensePassReport, EventKind, PassPlan, ScheduleMode, Trace, Window};

struct Shared {
    /// Page copy held by each slot, tagged with its plan position.
    slots: Vec<Option<(usize, Arc<CscPage>)>>,
    arrived: Vec<bool>,
    has_run: Vec<bool>,
    filling: Option<usize>,
    gap_used: Vec<bool>,
    completed: usize,
    xfer_busy: bool,
    next_xfer: usize,
    trace: Option<Trace>,
    transfers: u64,
    bytes: u64,
}

impl Shared {
    fn log(&mut self, t0: Instant, offset: f64, kind: EventKind, page: usize, pass: usize) {
        if let Some(tr) = &mut self.trace {
            tr.push(offset + t0.elapsed().as_nanos() as f64, kind, page, pass);
        }
    }

    fn transfer_ready(&self, plan: &PassPlan, j: usize) -> bool {
        let victim_free = plan
            .victim(j)
            .is_none_or(|v| self.completed > plan.last_use[v] && self.filling != Some(v));
        victim_free && self.completed >= plan.barrier[j]
    }

    fn slot_for(&self, plan: &PassPlan, j: usize) -> Result<usize> {
        let found = match plan.victim(j) {
            Some(v) => self
                .slots
                .iter()
                .position(|s| matches!(s, Some((i, _)) if *i == v)),
            None => self.slots.iter().position(Option::is_none),
        };
        found.ok_or_else(|| Error::ContractViolation(format!("no slot for page {}", plan.seq[j])))
    }

    fn page_at(&self, idx: usize) -> Option<Arc<CscPage>> {
        self.slots.iter().find_map(|s| match s {
            Some((i, p)) if *i == idx => Some(Arc::clone(p)),
            _ => None,
        })
    }
}

/// Window contents carried between wall-clock passes.
#[derive(Debug, Default, Clone)]
pub struct WallWindow {
    slots: Vec<Option<Arc<CscPage>>>,
    ids: Vec<Option<usize>>,
}

impl WallWindow {
    pub fn new(capacity: usize) -> Result<Self> {
        Window::new(capacity)?;
        Ok(Self {
            slots: vec![None; capacity],
            ids: vec![None; capacity],
        })
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn resident_pages(&self) -> Vec<usize> {
        let mut v: Vec<_> = self.ids.iter().flatten().copied().collect();
        v.sort_unstable();
        v
    }
}

/// Runs one dense pass, timing it with the wall clock. `start_time` offsets
/// the trace timestamps (nanoseconds).
///
/// Runs of one kernel set share an epoch; each set and each idle fill gets
/// a larger epoch than everything that finished before it started.
#[allow(clippy::too_many_arguments)]
pub fn run_dense_pass_wall<K>(
    pages: &PageSet,
    mode: ScheduleMode,
    window: &mut WallWindow,
    workers: &Workers,
    start_time: f64,
    pass_index: usize,
    record_trace: bool,
    kernel: K,
) -> Result<(DensePassReport, Option<Trace>)>
where
    K: Fn(&CscPage, u64) -> KernelOutcome + Sync + Send,
{
    let plan = PassPlan::new(
        mode,
        pages.len(),
        window.capacity(),
        &window.resident_pages(),
    )?;
    let n = plan.len();
    let t0 = Instant::now();

    let mut slots: Vec<Option<(usize, Arc<CscPage>)>> = vec![None; window.capacity()];
    for (slot, id) in window.ids.iter().enumerate() {
        if let Some(pos) = id.and_then(|p| plan.seq[..plan.warm].iter().position(|&q| q == p)) {
            slots[slot] = window.slots[slot].clone().map(|pg| (pos, pg));
        }
    }
    let mut arrived = vec![false; n];
    arrived[..plan.warm].fill(true);
    let state = Mutex::new(Shared {
        slots,
        arrived,
        has_run: vec![false; n],
        filling: None,
        gap_used: vec![false; n],
        completed: 0,
        xfer_busy: false,
        next_xfer: plan.warm,
        trace: record_trace.then(Trace::new),
        transfers: 0,
        bytes: 0,
    });
    let cv = Condvar::new();
    let mut report = DensePassReport {
        start_time,
        ..Default::default()
    };

    let run_group = |group: std::ops::Range<usize>,
                     epoch: u64,
                     report: &mut DensePassReport|
     -> Result<()> {
        let (members, page_refs) = {
            let mut st = state.lock().expect("scheduler lock");
            let mut members = Vec::new();
            let mut refs = Vec::new();
            for inv in &plan.invocations[group.clone()] {
                let page = st.page_at(inv.seq_idx).ok_or_else(|| {
                    Error::ContractViolation(format!("page {} not resident", plan.seq[inv.seq_idx]))
                })?;
                members.push(inv.seq_idx);
                refs.push(page);
                st.log(
                    t0,
                    start_time,
                    EventKind::KernelStart,
                    plan.seq[inv.seq_idx],
                    pass_index,
                );
            }
            (members, refs)
        };
        let max_repeats = plan.max_repeats();
        let outcomes = workers.map(&page_refs, |page| {
            let mut total = KernelOutcome::default();
            let mut runs = 0u64;
            loop {
                let out = kernel(page, epoch);
                total += out;
                runs += 1;
                if !(out.changed() && runs <= max_repeats as u64) {
                    break;
                }
            }
            (total, runs)
        });
        let mut st = state.lock().expect("scheduler lock");
        for (&idx, (out, runs)) in members.iter().zip(outcomes) {
            report.outcome += out;
            report.kernel_runs += runs;
            report.reentries += runs - 1;
            st.has_run[idx] = true;
            st.log(
                t0,
                start_time,
                EventKind::KernelEnd,
                plan.seq[idx],
                pass_index,
            );
        }
        st.completed += members.len();
        cv.notify_all();
        Ok(())
    };

    let transfer = |j: usize| -> Result<()> {
        let (slot, page) = {
            let mut st = state.lock().expect("scheduler lock");
            let slot = st.slot_for(&plan, j)?;
            st.slots[slot] = None;
            st.xfer_busy = true;
            st.gap_used.fill(false);
            st.log(
                t0,
                start_time,
                EventKind::XferStart,
                plan.seq[j],
                pass_index,
            );
            (slot, plan.seq[j])
        };
        // the copy stands in for the host-to-device transfer
        let copy = Arc::new(pages.get(page).clone());
        let bytes = copy.bytes();
        let mut st = state.lock().expect("scheduler lock");
        st.slots[slot] = Some((j, copy));
        st.arrived[j] = true;
        st.xfer_busy = false;
        st.transfers += 1;
        st.bytes += bytes;
        st.log(t0, start_time, EventKind::XferEnd, page, pass_index);
        cv.notify_all();
        Ok(())
    };

    if workers.is_parallel() {
        std::thread::scope(|scope| -> Result<()> {
            let agent = scope.spawn(|| -> Result<()> {
                loop {
                    let j = {
                        let mut st = state.lock().expect("scheduler lock");
                        loop {
                            if st.next_xfer >= n {
                                return Ok(());
                            }
                            let j = st.next_xfer;
                            if st.transfer_ready(&plan, j) {
                                st.next_xfer += 1;
                                break j;
                            }
                            st = cv.wait(st).expect("scheduler lock");
                        }
                    };
                    transfer(j)?;
                }
            });
            let compute = (|| -> Result<()> {
                let mut epoch = 0;
                for group in plan.groups() {
                    let gate = plan.gate[group.start];
                    loop {
                        let mut st = state.lock().expect("scheduler lock");
                        if st.arrived[gate] {
                            break;
                        }
                        let fill = if plan.fills_idle() && st.xfer_busy {
                            let victim = plan.victim(st.next_xfer);
                            (0..n)
                                .filter(|&i| st.has_run[i] && !st.gap_used[i] && Some(i) != victim)
                                .filter_map(|i| st.page_at(i).map(|p| (plan.seq[i], i, p)))
                                .min_by_key(|c| c.0)
                        } else {
                            None
                        };
                        match fill {
                            Some((page_id, i, page)) => {
                                st.gap_used[i] = true;
                                st.filling = Some(i);
                                st.log(t0, start_time, EventKind::Reentry, page_id, pass_index);
                                drop(st);
                                epoch += 1;
                                let out = kernel(&page, epoch);
                                let mut st = state.lock().expect("scheduler lock");
                                st.filling = None;
                                st.log(t0, start_time, EventKind::KernelEnd, page_id, pass_index);
                                report.outcome += out;
                                report.kernel_runs += 1;
                                report.reentries += 1;
                                cv.notify_all();
                            }
                            None => {
                                drop(cv.wait(st).expect("scheduler lock"));
                            }
                        }
                    }
                    epoch += 1;
                    run_group(group, epoch, &mut report)?;
                }
                Ok(())
            })();
            if compute.is_err() {
                // let the agent drain so the scope can join
                let mut st = state.lock().expect("scheduler lock");
                st.completed = usize::MAX / 2;
                cv.notify_all();
            }
            let agent = agent
                .join()
                .map_err(|_| Error::ContractViolation("transfer agent panicked".into()))?;
            compute.and(agent)
        })?;
    } else {
        for (epoch, group) in (1..).zip(plan.groups()) {
            let gate = plan.gate[group.start];
            loop {
                let j = state.lock().expect("scheduler lock").next_xfer;
                if j > gate {
                    break;
                }
                state.lock().expect("scheduler lock").next_xfer += 1;
                transfer(j)?;
            }
            run_group(group, epoch, &mut report)?;
        }
        while state.lock().expect("scheduler lock").next_xfer < n {
            let j = state.lock().expect("scheduler lock").next_xfer;
            state.lock().expect("scheduler lock").next_xfer += 1;
            transfer(j)?;
        }
    }

    let st = state.into_inner().expect("scheduler lock");
    if st.completed != plan.invocations.len() || st.arrived.iter().any(|a| !a) {
        return Err(Error::ContractViolation(
            "wall-clock pass did not finish".into(),
        ));
    }
    for (slot, s) in st.slots.iter().enumerate() {
        window.ids[slot] = s.as_ref().map(|(i, _)| plan.seq[*i]);
        window.slots[slot] = s.as_ref().map(|(_, p)| Arc::clone(p));
    }
    report.transfers = st.transfers;
    report.bytes_transferred = st.bytes;
    report.end_time = start_time + t0.elapsed().as_nanos() as f64;
    Ok((report, st.trace))
}
