//! Oracles, verification, experiment matrices and CSV reports.

mod oracle;
mod spec;

use std::io::{BufRead, Write};
use std::path::Path;

use serde::Serialize;

use crate::algorithms::{ProgramKind, Value, VertexProgram, INF};
use crate::engine::{self, EngineConfig, PreparedGraph};
use crate::error::{Error, Result};
use crate::graph::EdgeList;
use crate::ingest::{assign_weights, generate_rmat, load_binary, RmatParams};
use crate::metrics::{MetricsReport, PassKind};
use crate::par::Workers;
use crate::predictor::PredictorMode;
use crate::scheduler::{ClockMode, ScheduleMode, TransferModel};

pub use oracle::{reference_solve, verify, VerifyReport, MAX_LISTED_MISMATCHES};
pub use spec::{Dataset, ExperimentSpec};

/// Seed of the weight draw for a graph generated with `seed`.
pub fn weight_seed(seed: u64) -> u64 {
    seed ^ 0x005e_ed0f_ed6e_u64
}

/// The RMAT graph used by experiments: Graph500 quadrants, optional
/// uniform weights in `[wmin, wmax]`.
pub fn rmat_graph(
    scale: u32,
    edge_factor: u32,
    seed: u64,
    weights: Option<(u32, u32)>,
) -> Result<EdgeList> {
    let params = RmatParams {
        edge_factor,
        ..RmatParams::graph500(scale, seed)
    };
    let g = generate_rmat(&params)?;
    match weights {
        Some((lo, hi)) => assign_weights(g, weight_seed(seed), lo, hi),
        None => Ok(g),
    }
}

/// One CSV row: a cell of the matrix, one repetition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixRow {
    pub graph: String,
    pub vertices: usize,
    pub edges: usize,
    pub algorithm: ProgramKind,
    pub mode: ScheduleMode,
    pub predictor: PredictorMode,
    pub workers: usize,
    pub window: usize,
    pub pages: usize,
    pub clock: ClockMode,
    pub passes: usize,
    pub sparse_passes: usize,
    pub dense_passes: usize,
    pub recovery_passes: usize,
    pub pages_transferred: u64,
    pub bytes_transferred: u64,
    pub update_attempts: u64,
    pub valid_updates: u64,
    pub skipped_vertices: u64,
    pub edge_reads: u64,
    pub kernel_runs: u64,
    pub reentries: u64,
    pub virtual_makespan: f64,
    /// Zero under the virtual clock so reports stay reproducible.
    pub wall_time: f64,
    pub gteps: f64,
    pub verified: bool,
}

#[derive(Debug, Clone, Default)]
pub struct MatrixReport {
    pub rows: Vec<MatrixRow>,
}

impl MatrixReport {
    pub fn all_verified(&self) -> bool {
        self.rows.iter().all(|r| r.verified)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

struct NamedGraph {
    name: String,
    edges: EdgeList,
}

fn load_graphs(spec: &ExperimentSpec) -> Result<Vec<NamedGraph>> {
    match spec.dataset() {
        Dataset::File(path) => {
            let edges = load_binary(&path)?;
            if spec.algorithm.needs_weights() && !edges.is_weighted() {
                return Err(Error::InvalidConfig(format!(
                    "{} has no weights",
                    path.display()
                )));
            }
            Ok(vec![NamedGraph {
                name: path.file_name().map_or_else(
                    || path.display().to_string(),
                    |f| f.to_string_lossy().into_owned(),
                ),
                edges,
            }])
        }
        Dataset::Rmat {
            scales,
            edge_factor,
            graphs,
        } => {
            let weights = spec.weighted().then_some((spec.wmin, spec.wmax));
            let mut out = Vec::new();
            for &scale in &scales {
                for g in 0..graphs as u64 {
                    let seed = spec.seed.wrapping_add(g);
                    out.push(NamedGraph {
                        name: format!("rmat{scale}-s{seed}"),
                        edges: rmat_graph(scale, edge_factor, seed, weights)?,
                    });
                }
            }
            Ok(out)
        }
    }
}

/// Engine configuration of one matrix cell.
pub fn cell_config(
    mode: ScheduleMode,
    predictor: PredictorMode,
    workers: usize,
    window: usize,
    page_cap: Option<usize>,
    clock: ClockMode,
) -> EngineConfig {
    EngineConfig {
        page_vertex_capacity: page_cap,
        predictor,
        mode,
        window,
        model: TransferModel::calibrated(workers),
        clock,
        ..EngineConfig::default()
    }
}

/// Runs every cell of `spec` and verifies it against the oracle.
pub fn run_matrix(spec: &ExperimentSpec) -> Result<MatrixReport> {
    spec.validate()?;
    let graphs = load_graphs(spec)?;
    let mut report = MatrixReport::default();
    for g in &graphs {
        let kind = spec.algorithm;
        let prepared = PreparedGraph::new(&g.edges, kind, spec.page_cap)?;
        let program = VertexProgram::for_kind(
            kind,
            spec.source,
            g.edges.num_vertices(),
            g.edges.is_weighted(),
        )?;
        let oracle = reference_solve(&g.edges, kind, spec.source)?;
        let mut cells = Vec::new();
        for &mode in &spec.modes {
            for &predictor in &spec.predictors {
                for &workers in &spec.workers {
                    for &window in &spec.windows {
                        cells.push((mode, predictor, workers, window));
                    }
                }
            }
        }
        let run_cell = |&(mode, predictor, workers, window): &(
            ScheduleMode,
            PredictorMode,
            usize,
            usize,
        )|
         -> Result<Vec<MatrixRow>> {
            let config = cell_config(mode, predictor, workers, window, spec.page_cap, spec.clock);
            let mut rows = Vec::new();
            for _ in 0..spec.repetitions {
                let (values, m) = engine::run(&prepared, &program, &config)?;
                let verified = verify(&values, &oracle)?.passed();
                rows.push(MatrixRow::from_run(
                    &g.name, &prepared, &config, kind, &m, verified,
                ));
            }
            Ok(rows)
        };
        let pool = if spec.parallel_cells {
            Workers::new(std::thread::available_parallelism().map_or(1, |n| n.get()))?
        } else {
            Workers::sequential()
        };
        for rows in pool.map(&cells, run_cell) {
            report.rows.extend(rows?);
        }
    }
    Ok(report)
}

impl MatrixRow {
    pub fn from_run(
        name: &str,
        g: &PreparedGraph,
        c: &EngineConfig,
        kind: ProgramKind,
        m: &MetricsReport,
        verified: bool,
    ) -> Self {
        MatrixRow {
            graph: name.to_string(),
            vertices: g.num_vertices(),
            edges: g.num_edges(),
            algorithm: kind,
            mode: c.mode,
            predictor: c.predictor,
            workers: c.worker_count(),
            window: c.window,
            pages: g.pages().len(),
            clock: c.clock,
            passes: m.passes,
            sparse_passes: m.sparse_passes,
            dense_passes: m.dense_passes,
            recovery_passes: m.recovery_passes,
            pages_transferred: m.pages_transferred,
            bytes_transferred: m.bytes_transferred,
            update_attempts: m.update_attempts,
            valid_updates: m.valid_updates,
            skipped_vertices: m.skipped_vertices,
            edge_reads: m.edge_reads,
            kernel_runs: m.kernel_runs,
            reentries: m.reentries,
            virtual_makespan: m.virtual_makespan,
            wall_time: m.wall_time,
            gteps: m.gteps(),
            verified,
        }
    }
}

/// Per-pass weak-state census.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HistogramRow {
    pub pass: usize,
    pub kind: PassKind,
    pub s0: u64,
    pub s1: u64,
    pub s2: u64,
    pub s3: u64,
    pub s4: u64,
    pub s5: u64,
    /// Vertices in a pulling state (0, 1, 5).
    pub attempted: u64,
    /// Vertices in a skipping state (2, 3, 4).
    pub skipped: u64,
    /// Vertices whose value changed in the pass.
    pub real: u64,
}

/// One row per pass from a weak-predictor run.
pub fn status_histogram_report(report: &MetricsReport) -> Result<Vec<HistogramRow>> {
    if report.pass_records.is_empty() {
        return Err(Error::MissingData("run recorded no passes".into()));
    }
    report
        .pass_records
        .iter()
        .map(|p| {
            let s = p.status_counts.ok_or_else(|| {
                Error::MissingData(format!(
                    "pass {} has no status histogram; run with the weak predictor",
                    p.index
                ))
            })?;
            Ok(HistogramRow {
                pass: p.index,
                kind: p.kind,
                s0: s[0],
                s1: s[1],
                s2: s[2],
                s3: s[3],
                s4: s[4],
                s5: s[5],
                attempted: s[0] + s[1] + s[5],
                skipped: s[2] + s[3] + s[4],
                real: p.changed_vertices,
            })
        })
        .collect()
}

pub fn write_histogram_csv<W: Write>(rows: &[HistogramRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// One value per line, `inf` for unreached vertices.
pub fn write_values<W: Write>(values: &[Value], mut out: W) -> Result<()> {
    for &v in values {
        if v == INF {
            writeln!(out, "inf")?;
        } else {
            writeln!(out, "{v}")?;
        }
    }
    Ok(())
}

pub fn read_values<R: BufRead>(input: R) -> Result<Vec<Value>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v = if t.eq_ignore_ascii_case("inf") {
            INF
        } else {
            t.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("expected a value or inf, got {t:?}"),
            })?
        };
        out.push(v);
    }
    Ok(out)
}
