use crate::graph::PageId;

/// What the fine-grained scheduler sees when a resource goes idle.
#[derive(Debug, Clone, Copy)]
pub struct IdleView<'a> {
    pub transfer_idle: bool,
    pub compute_idle: bool,
    /// A next page exists and the slot it overwrites holds no pending work.
    pub next_transfer_ready: bool,
    /// Resident pages that already ran this pass and may run once more.
    pub finished: &'a [PageId],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdleAction {
    TransferNext,
    Reentry(PageId),
    Wait,
}

/// Idle-slot rule for `pipelined-fine`.
///
/// A free link starts the next transfer as soon as its slot is reusable.
/// Compute left idle while a transfer is still running re-runs one finished
/// page, the lowest id. Otherwise wait.
pub fn fill_idle_slot(view: &IdleView<'_>) -> IdleAction {
    if view.transfer_idle && view.next_transfer_ready {
        return IdleAction::TransferNext;
    }
    if view.compute_idle && !view.transfer_idle {
        if let Some(&p) = view.finished.iter().min() {
            return IdleAction::Reentry(p);
        }
    }
    IdleAction::Wait
}
