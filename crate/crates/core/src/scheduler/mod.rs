//! Dense-pass page scheduling over a bounded window.
//!
//! A dense pass runs a pull kernel over every page. Pages live on the host
//! and must be transferred into one of the window's `B` slots before their
//! kernel can run. The [`ScheduleMode`] decides the order of transfers and
//! kernel runs:
//!
//! * `baseline`: stream pages in order, run each kernel once.
//! * `reentry(mrt)`: as baseline, but re-run a page's kernel while it keeps
//!   changing values, at most `mrt` extra times.
//! * `double-buffer(reps)`: the window is split in halves; one half is
//!   processed `reps` times while the other half streams in.
//! * `pipelined`: kernel sets of `B - 1` consecutive resident pages slide one
//!   page at a time while the next page streams into the free slot.
//! * `pipelined-fine`: pipelined without step barriers, idle compute filled
//!   with single re-runs of resident pages (see [`fill_idle_slot`]).
//!
//! Two backends share these semantics: [`simulate`] drives a deterministic
//! virtual clock and charges transfers and kernels with a [`TransferModel`];
//! [`wall`] executes the same plan on real threads.

mod clock;
mod idle;
mod plan;
pub mod simulate;
mod trace;
pub mod wall;
mod window;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use clock::VirtualClock;
pub use idle::{fill_idle_slot, IdleAction, IdleView};
pub use plan::PassPlan;
pub use simulate::{schedule_dense_pass, DensePassReport};
pub use trace::{EventKind, Trace, TraceEvent};
pub use window::{KernelState, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleMode {
    Baseline,
    /// Loaded-data reentry with at most `mrt` re-runs per page.
    Reentry {
        mrt: u32,
    },
    DoubleBuffer {
        reps: u32,
    },
    Pipelined,
    PipelinedFine,
}

impl ScheduleMode {
    pub const DEFAULT_REPS: u32 = 3;
    pub const DEFAULT_MRT: u32 = 2;

    /// The five modes with default parameters.
    pub fn all() -> [ScheduleMode; 5] {
        [
            ScheduleMode::Baseline,
            ScheduleMode::Reentry {
                mrt: Self::DEFAULT_MRT,
            },
            ScheduleMode::DoubleBuffer {
                reps: Self::DEFAULT_REPS,
            },
            ScheduleMode::Pipelined,
            ScheduleMode::PipelinedFine,
        ]
    }

    pub fn validate(&self, window: usize) -> Result<()> {
        match *self {
            ScheduleMode::Reentry { mrt: 0 } => {
                Err(Error::InvalidConfig("reentry needs mrt >= 1".into()))
            }
            ScheduleMode::DoubleBuffer { reps: 0 } => {
                Err(Error::InvalidConfig("double-buffer needs reps >= 1".into()))
            }
            ScheduleMode::DoubleBuffer { .. }
            | ScheduleMode::Pipelined
            | ScheduleMode::PipelinedFine
                if window < 2 =>
            {
                Err(Error::InvalidConfig(format!(
                    "{self} needs a window of at least 2 pages, got {window}"
                )))
            }
            _ if window < 1 => Err(Error::InvalidConfig("window must hold a page".into())),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScheduleMode::Baseline => "baseline",
            ScheduleMode::Reentry { .. } => "reentry",
            ScheduleMode::DoubleBuffer { .. } => "double-buffer",
            ScheduleMode::Pipelined => "pipelined",
            ScheduleMode::PipelinedFine => "pipelined-fine",
        }
    }
}

impl fmt::Display for ScheduleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleMode::Reentry { mrt } => write!(f, "reentry:{mrt}"),
            ScheduleMode::DoubleBuffer { reps } => write!(f, "double-buffer:{reps}"),
            other => f.write_str(other.name()),
        }
    }
}

/// Accepts `name` or `name:param`, e.g. `reentry:3`, `double-buffer:2`.
impl FromStr for ScheduleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let param = |default: u32| -> Result<u32> {
            param.map_or(Ok(default), |p| {
                p.parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad mode parameter in {s:?}")))
            })
        };
        let mode = match name.to_ascii_lowercase().replace('_', "-").as_str() {
            "baseline" => ScheduleMode::Baseline,
            "reentry" => ScheduleMode::Reentry {
                mrt: param(Self::DEFAULT_MRT)?,
            },
            "double-buffer" => ScheduleMode::DoubleBuffer {
                reps: param(Self::DEFAULT_REPS)?,
            },
            "pipelined" => ScheduleMode::Pipelined,
            "pipelined-fine" => ScheduleMode::PipelinedFine,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown schedule mode {other:?}"
                )))
            }
        };
        Ok(mode)
    }
}

impl Serialize for ScheduleMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScheduleMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockMode {
    #[default]
    Virtual,
    Wall,
}

impl fmt::Display for ClockMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClockMode::Virtual => "virtual",
            ClockMode::Wall => "wall",
        })
    }
}

impl FromStr for ClockMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "virtual" => Ok(ClockMode::Virtual),
            "wall" => Ok(ClockMode::Wall),
            other => Err(Error::InvalidConfig(format!("unknown clock {other:?}"))),
        }
    }
}

/// Virtual-time cost model. Time is in nanoseconds, so byte rates read as
/// GB/s and `edges / time` reads as GTEPS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferModel {
    /// Host-to-window link bandwidth.
    pub bytes_per_time_unit: f64,
    /// Pull throughput of a single worker.
    pub edges_per_time_unit_per_worker: f64,
    /// Host push throughput for sparse passes.
    pub host_edges_per_time_unit: f64,
    pub worker_count: usize,
}

/// PCIe 3.0 x16 asynchronous copy rate, GB/s.
pub const LINK_GBPS: f64 = 11.0;
/// Device-internal memory bandwidth, GB/s, shared by this many workers.
pub const DEVICE_GBPS: f64 = 224.0;
pub const DEVICE_WORKERS: f64 = 16.0;
/// Device memory traffic per pulled edge: the 4-byte source id plus the
/// 8-byte source value.
pub const KERNEL_BYTES_PER_EDGE: f64 = 12.0;

impl TransferModel {
    /// Link and device rates in the 11 : 224 ratio. With 4 workers a page's
    /// kernel already takes well under its transfer time.
    pub fn calibrated(worker_count: usize) -> Self {
        Self {
            bytes_per_time_unit: LINK_GBPS,
            edges_per_time_unit_per_worker: DEVICE_GBPS / DEVICE_WORKERS / KERNEL_BYTES_PER_EDGE,
            host_edges_per_time_unit: 0.5,
            worker_count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            self.bytes_per_time_unit,
            self.edges_per_time_unit_per_worker,
            self.host_edges_per_time_unit,
        ];
        if rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "transfer model rates must be positive, got {rates:?}"
            )));
        }
        if self.worker_count == 0 {
            return Err(Error::InvalidConfig("worker_count must be >= 1".into()));
        }
        Ok(())
    }

    pub fn transfer_time(&self, bytes: u64) -> f64 {
        bytes as f64 / self.bytes_per_time_unit
    }

    pub fn kernel_time(&self, edge_reads: u64) -> f64 {
        edge_reads as f64 / (self.edges_per_time_unit_per_worker * self.worker_count as f64)
    }

    pub fn host_time(&self, edge_reads: u64) -> f64 {
        edge_reads as f64 / self.host_edges_per_time_unit
    }
}

impl Default for TransferModel {
    fn default() -> Self {
        Self::calibrated(4)
    }
}
