use crate::error::Result;
use crate::graph::PageId;

use super::ScheduleMode;

/// One planned kernel run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Invocation {
    /// Position of the page in [`PassPlan::seq`].
    pub seq_idx: usize,
    /// Runs sharing a group form one kernel set and may execute together.
    pub group: usize,
}

/// Static shape of one dense pass: page order, planned kernel runs and the
/// dependencies between transfers and runs. Both backends execute this.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassPlan {
    pub mode: ScheduleMode,
    /// Processing order: pages still resident from the previous pass first,
    /// then the rest, each part ascending.
    pub seq: Vec<PageId>,
    /// `seq[..warm]` need no transfer.
    pub warm: usize,
    /// `seq[j]` is loaded into the slot of `seq[j - slots]`.
    pub slots: usize,
    pub invocations: Vec<Invocation>,
    /// Per invocation: it may start once `seq[..=gate]` has arrived.
    pub gate: Vec<usize>,
    /// Per page position: index of the last invocation that uses it.
    pub last_use: Vec<usize>,
    /// Per page position: number of invocations that must have completed
    /// before its transfer may start.
    pub barrier: Vec<usize>,
}

impl PassPlan {
    /// Plans a pass over `num_pages` pages with `resident` pages already in a
    /// window of `capacity` slots.
    pub fn new(
        mode: ScheduleMode,
        num_pages: usize,
        capacity: usize,
        resident: &[PageId],
    ) -> Result<Self> {
        mode.validate(capacity)?;
        let slots = match mode {
            ScheduleMode::DoubleBuffer { .. } => capacity / 2 * 2,
            _ => capacity,
        };
        let mut warm_pages: Vec<PageId> = resident
            .iter()
            .copied()
            .filter(|&p| p < num_pages)
            .collect();
        warm_pages.sort_unstable();
        warm_pages.dedup();
        warm_pages.truncate(slots);
        let warm = warm_pages.len();
        let mut seq = warm_pages;
        let mut is_warm = vec![false; num_pages];
        for &p in &seq {
            is_warm[p] = true;
        }
        seq.extend((0..num_pages).filter(|&p| !is_warm[p]));

        let n = num_pages;
        let mut invocations = Vec::new();
        let mut gate = Vec::new();
        let mut barrier = vec![0; n];
        match mode {
            ScheduleMode::Baseline | ScheduleMode::Reentry { .. } => {
                for j in 0..n {
                    invocations.push(Invocation {
                        seq_idx: j,
                        group: j,
                    });
                    gate.push(j);
                }
            }
            ScheduleMode::DoubleBuffer { reps } => {
                let h = slots / 2;
                for (half, start) in (0..n).step_by(h).enumerate() {
                    let end = (start + h).min(n);
                    for r in 0..reps as usize {
                        for j in start..end {
                            invocations.push(Invocation {
                                seq_idx: j,
                                group: half * reps as usize + r,
                            });
                            gate.push(end - 1);
                        }
                    }
                }
            }
            ScheduleMode::Pipelined | ScheduleMode::PipelinedFine => {
                let w = (slots - 1).min(n);
                let sets = if n == 0 { 0 } else { n - w + 1 };
                for i in 0..sets {
                    for j in i..i + w {
                        invocations.push(Invocation {
                            seq_idx: j,
                            group: i,
                        });
                        gate.push(i + w - 1);
                    }
                }
                if mode == ScheduleMode::Pipelined {
                    // step barrier: the transfer of seq[j] overlaps set j - w
                    // and waits for every earlier set
                    for (j, b) in barrier.iter_mut().enumerate() {
                        if j > w {
                            *b = (j - w) * w;
                        }
                    }
                }
            }
        }
        let mut last_use = vec![0; n];
        for (i, inv) in invocations.iter().enumerate() {
            last_use[inv.seq_idx] = i;
        }
        Ok(Self {
            mode,
            seq,
            warm,
            slots,
            invocations,
            gate,
            last_use,
            barrier,
        })
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    /// Extra runs allowed after a run that changed something.
    pub fn max_repeats(&self) -> u32 {
        match self.mode {
            ScheduleMode::Reentry { mrt } => mrt,
            _ => 0,
        }
    }

    pub fn fills_idle(&self) -> bool {
        self.mode == ScheduleMode::PipelinedFine
    }

    /// Position whose slot `seq[j]` overwrites, if any.
    pub fn victim(&self, j: usize) -> Option<usize> {
        j.checked_sub(self.slots)
    }

    /// Invocation ranges of consecutive runs in the same group.
    pub fn groups(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.invocations.len() {
            if i == self.invocations.len()
                || self.invocations[i].group != self.invocations[start].group
            {
                out.push(start..i);
                start = i;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pages_of(plan: &PassPlan, group: std::ops::Range<usize>) -> Vec<PageId> {
        plan.invocations[group]
            .iter()
            .map(|inv| plan.seq[inv.seq_idx])
            .collect()
    }

    #[test]
    fn pipelined_sets_slide_by_one() {
        let plan = PassPlan::new(ScheduleMode::Pipelined, 5, 4, &[]).unwrap();
        let sets: Vec<_> = plan
            .groups()
            .into_iter()
            .map(|g| pages_of(&plan, g))
            .collect();
        assert_eq!(sets, vec![vec![0, 1, 2], vec![1, 2, 3], vec![2, 3, 4]]);
        // page 4 loads into page 0's slot once set {0,1,2} is done
        assert_eq!(plan.victim(4), Some(0));
        assert_eq!(plan.barrier[4], 3);
        assert_eq!(plan.barrier[3], 0);
    }

    #[test]
    fn residency_is_window_minus_one() {
        for n in 1..20 {
            let plan = PassPlan::new(ScheduleMode::PipelinedFine, n, 5, &[]).unwrap();
            let mut member = vec![0; n];
            for inv in &plan.invocations {
                member[plan.seq[inv.seq_idx]] += 1;
            }
            let w = 4.min(n);
            for (p, &m) in member.iter().enumerate() {
                assert!(m >= 1 && m <= w, "n={n} page {p} in {m} sets");
                if n >= 2 * w && p >= w - 1 && p + w <= n {
                    assert_eq!(m, w, "interior page {p}");
                }
            }
        }
    }

    #[test]
    fn warm_pages_come_first() {
        let plan = PassPlan::new(ScheduleMode::Baseline, 6, 2, &[4, 1]).unwrap();
        assert_eq!(plan.seq, vec![1, 4, 0, 2, 3, 5]);
        assert_eq!(plan.warm, 2);
    }

    #[test]
    fn double_buffer_repeats_halves() {
        let plan = PassPlan::new(ScheduleMode::DoubleBuffer { reps: 3 }, 5, 5, &[]).unwrap();
        assert_eq!(plan.slots, 4);
        let sets: Vec<_> = plan
            .groups()
            .into_iter()
            .map(|g| pages_of(&plan, g))
            .collect();
        assert_eq!(sets.len(), 9);
        assert_eq!(sets[0], vec![0, 1]);
        assert_eq!(sets[3], vec![2, 3]);
        assert_eq!(sets[8], vec![4]);
        assert_eq!(plan.gate[0], 1);
    }

    #[test]
    fn one_window_short_graph() {
        let plan = PassPlan::new(ScheduleMode::Pipelined, 2, 8, &[]).unwrap();
        assert_eq!(plan.groups().len(), 1);
        assert_eq!(plan.invocations.len(), 2);
        assert!(PassPlan::new(ScheduleMode::Pipelined, 0, 8, &[])
            .unwrap()
            .invocations
            .is_empty());
    }
}
