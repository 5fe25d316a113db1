use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::algorithms::ProgramKind;
use crate::error::{Error, Result};
use crate::ingest::DEFAULT_WEIGHT_RANGE;
use crate::predictor::PredictorMode;
use crate::scheduler::{ClockMode, ScheduleMode};

/// Where the graphs of an experiment come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    File(PathBuf),
    Rmat {
        scales: Vec<u32>,
        edge_factor: u32,
        /// Independent graphs per scale, seeded `seed, seed + 1, ...`.
        graphs: u32,
    },
}

/// Experiment matrix read from a TOML file.
///
/// ```toml
/// algorithm = "cc"
/// rmat_scales = [12, 14]
/// modes = ["baseline", "pipelined-fine"]
/// predictors = ["off", "weak"]
/// workers = [1, 4]
/// windows = [8]
/// seed = 7
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub algorithm: ProgramKind,
    #[serde(default)]
    pub source: u32,
    /// Binary graph file; relative paths resolve against the spec file.
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub rmat_scales: Vec<u32>,
    #[serde(default = "default_edge_factor")]
    pub edge_factor: u32,
    #[serde(default = "one")]
    pub graphs: u32,
    /// Draw weights for generated graphs. Implied by `sssp`.
    #[serde(default)]
    pub weighted: bool,
    #[serde(default = "default_wmin")]
    pub wmin: u32,
    #[serde(default = "default_wmax")]
    pub wmax: u32,
    #[serde(default = "default_modes")]
    pub modes: Vec<ScheduleMode>,
    #[serde(default = "default_predictors")]
    pub predictors: Vec<PredictorMode>,
    #[serde(default = "default_workers")]
    pub workers: Vec<usize>,
    #[serde(default = "default_windows")]
    pub windows: Vec<usize>,
    #[serde(default)]
    pub page_cap: Option<usize>,
    #[serde(default = "one")]
    pub repetitions: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub clock: ClockMode,
    /// Run independent cells concurrently.
    #[serde(default)]
    pub parallel_cells: bool,
}

fn default_edge_factor() -> u32 {
    16
}
fn one() -> u32 {
    1
}
fn default_wmin() -> u32 {
    DEFAULT_WEIGHT_RANGE.0
}
fn default_wmax() -> u32 {
    DEFAULT_WEIGHT_RANGE.1
}
fn default_modes() -> Vec<ScheduleMode> {
    vec![ScheduleMode::Baseline]
}
fn default_predictors() -> Vec<PredictorMode> {
    vec![PredictorMode::Off]
}
fn default_workers() -> Vec<usize> {
    vec![4]
}
fn default_windows() -> Vec<usize> {
    vec![8]
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("experiment spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a spec file, resolving a relative `dataset` against its folder.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut spec = Self::parse(&std::fs::read_to_string(path)?)?;
        if let Some(d) = &spec.dataset {
            if d.is_relative() {
                if let Some(dir) = path.parent() {
                    spec.dataset = Some(dir.join(d));
                }
            }
        }
        Ok(spec)
    }

    pub fn dataset(&self) -> Dataset {
        match &self.dataset {
            Some(p) => Dataset::File(p.clone()),
            None => Dataset::Rmat {
                scales: self.rmat_scales.clone(),
                edge_factor: self.edge_factor,
                graphs: self.graphs,
            },
        }
    }

    pub fn weighted(&self) -> bool {
        self.weighted || self.algorithm.needs_weights()
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.dataset, self.rmat_scales.is_empty()) {
            (Some(_), false) => {
                return Err(Error::InvalidConfig(
                    "give either dataset or rmat_scales, not both".into(),
                ))
            }
            (None, true) => {
                return Err(Error::InvalidConfig("no dataset and no rmat_scales".into()))
            }
            _ => {}
        }
        let empty = [
            ("modes", self.modes.is_empty()),
            ("predictors", self.predictors.is_empty()),
            ("workers", self.workers.is_empty()),
            ("windows", self.windows.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::InvalidConfig(format!("{name} must not be empty")));
        }
        if self.repetitions == 0 || self.graphs == 0 {
            return Err(Error::InvalidConfig(
                "repetitions and graphs must be >= 1".into(),
            ));
        }
        if self.workers.contains(&0) {
            return Err(Error::InvalidConfig("worker counts must be >= 1".into()));
        }
        for &b in &self.windows {
            for m in &self.modes {
                m.validate(b)?;
            }
        }
        if self.wmin < 1 || self.wmax < self.wmin {
            return Err(Error::InvalidConfig(format!(
                "bad weight range [{}, {}]",
                self.wmin, self.wmax
            )));
        }
        Ok(())
    }
}
