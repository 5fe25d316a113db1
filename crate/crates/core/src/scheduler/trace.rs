use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::graph::PageId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    XferStart,
    XferEnd,
    KernelStart,
    KernelEnd,
    /// Start of a kernel run on a page that already ran this pass.
    Reentry,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::XferStart => "xfer_start",
            EventKind::XferEnd => "xfer_end",
            EventKind::KernelStart => "kernel_start",
            EventKind::KernelEnd => "kernel_end",
            EventKind::Reentry => "reentry",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEvent {
    pub event_time: f64,
    pub event_kind: EventKind,
    pub page_id: PageId,
    pub pass_index: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    events: Vec<TraceEvent>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(
        &mut self,
        event_time: f64,
        event_kind: EventKind,
        page_id: PageId,
        pass_index: usize,
    ) {
        self.events.push(TraceEvent {
            event_time,
            event_kind,
            page_id,
            pass_index,
        });
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn extend(&mut self, other: Trace) {
        self.events.extend(other.events);
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.event_kind == kind).count()
    }

    pub fn pass(&self, pass_index: usize) -> impl Iterator<Item = &TraceEvent> {
        self.events
            .iter()
            .filter(move |e| e.pass_index == pass_index)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for e in &self.events {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}
