use crate::error::{Error, Result};
use crate::graph::PageId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelState {
    /// Resident, not yet run in the current pass.
    Queued,
    Running,
    /// Ran at least once this pass and is not running now.
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Empty,
    Loading(PageId),
    Resident(PageId, KernelState),
}

/// The `B` page slots of the device-side buffer.
///
/// At most one transfer is in flight and a slot whose kernel is running is
/// never overwritten. Residency survives across passes.
#[derive(Debug, Clone)]
pub struct Window {
    slots: Vec<Slot>,
}

impl Window {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidConfig("window capacity must be >= 1".into()));
        }
        Ok(Self {
            slots: vec![Slot::Empty; capacity],
        })
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    /// Pages fully loaded into some slot, ascending.
    pub fn resident_pages(&self) -> Vec<PageId> {
        let mut pages: Vec<_> = self
            .slots
            .iter()
            .filter_map(|s| match *s {
                Slot::Resident(p, _) => Some(p),
                _ => None,
            })
            .collect();
        pages.sort_unstable();
        pages
    }

    pub fn slot_of(&self, page: PageId) -> Option<usize> {
        self.slots.iter().position(|s| match *s {
            Slot::Resident(p, _) | Slot::Loading(p) => p == page,
            Slot::Empty => false,
        })
    }

    pub fn state(&self, page: PageId) -> Option<KernelState> {
        self.slots.iter().find_map(|s| match *s {
            Slot::Resident(p, st) if p == page => Some(st),
            _ => None,
        })
    }

    pub fn is_resident(&self, page: PageId) -> bool {
        self.state(page).is_some()
    }

    pub fn free_slot(&self) -> Option<usize> {
        self.slots.iter().position(|s| *s == Slot::Empty)
    }

    pub fn in_flight(&self) -> Option<(usize, PageId)> {
        self.slots.iter().enumerate().find_map(|(i, s)| match *s {
            Slot::Loading(p) => Some((i, p)),
            _ => None,
        })
    }

    /// Keeps only the listed pages resident.
    pub fn retain(&mut self, keep: &[PageId]) {
        for s in &mut self.slots {
            if let Slot::Resident(p, _) = *s {
                if !keep.contains(&p) {
                    *s = Slot::Empty;
                }
            }
        }
    }

    /// Marks every resident page as not yet run.
    pub fn start_pass(&mut self) -> Result<()> {
        for s in &mut self.slots {
            match s {
                Slot::Resident(_, st) => *st = KernelState::Queued,
                Slot::Loading(p) => {
                    return Err(Error::ContractViolation(format!(
                        "page {p} still loading at pass start"
                    )))
                }
                Slot::Empty => {}
            }
        }
        Ok(())
    }

    pub fn begin_transfer(&mut self, slot: usize, page: PageId) -> Result<()> {
        if let Some((_, p)) = self.in_flight() {
            return Err(Error::ContractViolation(format!(
                "transfer of page {page} while page {p} is in flight"
            )));
        }
        if self.slot_of(page).is_some() {
            return Err(Error::ContractViolation(format!(
                "page {page} already resident"
            )));
        }
        match self.slots.get(slot) {
            None => Err(Error::ContractViolation(format!("no slot {slot}"))),
            Some(Slot::Resident(p, KernelState::Running)) => Err(Error::ContractViolation(
                format!("slot {slot} holds running page {p}"),
            )),
            Some(_) => {
                self.slots[slot] = Slot::Loading(page);
                Ok(())
            }
        }
    }

    pub fn finish_transfer(&mut self) -> Result<(usize, PageId)> {
        let (slot, page) = self
            .in_flight()
            .ok_or_else(|| Error::ContractViolation("no transfer in flight".into()))?;
        self.slots[slot] = Slot::Resident(page, KernelState::Queued);
        Ok((slot, page))
    }

    pub fn start_kernel(&mut self, page: PageId) -> Result<()> {
        self.set_state(page, |st| st != KernelState::Running, KernelState::Running)
    }

    pub fn finish_kernel(&mut self, page: PageId) -> Result<()> {
        self.set_state(page, |st| st == KernelState::Running, KernelState::Done)
    }

    fn set_state(
        &mut self,
        page: PageId,
        allowed: impl Fn(KernelState) -> bool,
        next: KernelState,
    ) -> Result<()> {
        for s in &mut self.slots {
            if let Slot::Resident(p, st) = s {
                if *p == page {
                    if !allowed(*st) {
                        return Err(Error::ContractViolation(format!(
                            "page {page} cannot go from {st:?} to {next:?}"
                        )));
                    }
                    *st = next;
                    return Ok(());
                }
            }
        }
        Err(Error::ContractViolation(format!(
            "page {page} is not resident"
        )))
    }
}
