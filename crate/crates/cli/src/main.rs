use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use pagestream::algorithms::{ProgramKind, VertexProgram};
use pagestream::bench::{
    cell_config, read_values, reference_solve, rmat_graph, run_matrix, status_histogram_report,
    verify, write_histogram_csv, write_values, ExperimentSpec, MatrixReport, MatrixRow,
};
use pagestream::engine::{self, PreparedGraph};
use pagestream::graph::{EdgeList, VertexId};
use pagestream::ingest::{load_binary, parse_edge_list, save_binary};
use pagestream::predictor::PredictorMode;
use pagestream::scheduler::{ClockMode, ScheduleMode};

#[derive(Parser)]
#[command(
    name = "pagestream",
    version,
    about = "Windowed graph engine with pipelined page iteration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Graph500 RMAT graph in the binary format.
    Generate {
        #[arg(long)]
        scale: u32,
        #[arg(long, default_value_t = 16)]
        edge_factor: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        weighted: bool,
        #[arg(long, default_value_t = 1)]
        wmin: u32,
        #[arg(long, default_value_t = 64)]
        wmax: u32,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Convert a text edge list to the binary format.
    Ingest {
        #[arg(long, value_enum, default_value_t = Format::Edgelist)]
        format: Format,
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run one algorithm on a graph file.
    Run {
        #[arg(long)]
        algo: ProgramKind,
        #[arg(long, default_value_t = 0)]
        source: VertexId,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value = "baseline")]
        mode: ScheduleMode,
        #[arg(long, default_value = "off")]
        predict: PredictorMode,
        #[arg(long, default_value_t = 8)]
        window: usize,
        #[arg(long, default_value_t = 4)]
        workers: usize,
        #[arg(long)]
        page_cap: Option<usize>,
        #[arg(long, default_value = "virtual")]
        clock: ClockMode,
        /// Transfer and kernel events as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Run metrics as a one-row CSV.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Per-pass weak-state histogram as CSV.
        #[arg(long)]
        histogram: Option<PathBuf>,
        #[arg(long)]
        values_out: Option<PathBuf>,
        /// Check the result against the sequential oracle.
        #[arg(long)]
        verify: bool,
    },
    /// Run an experiment matrix described by a TOML spec.
    Bench {
        #[arg(long)]
        spec: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check a values file against the sequential oracle.
    Verify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        algo: ProgramKind,
        #[arg(long, default_value_t = 0)]
        source: VertexId,
        #[arg(long)]
        values: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Edgelist,
    EdgelistWeighted,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn load_graph(path: &Path) -> Result<EdgeList> {
    load_binary(path).with_context(|| format!("loading {}", path.display()))
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Returns whether every verification that ran passed.
fn dispatch(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Generate {
            scale,
            edge_factor,
            seed,
            weighted,
            wmin,
            wmax,
            output,
        } => {
            let g = rmat_graph(scale, edge_factor, seed, weighted.then_some((wmin, wmax)))?;
            save_binary(&g, &output)?;
            println!(
                "{} vertices, {} edges -> {}",
                g.num_vertices(),
                g.num_edges(),
                output.display()
            );
            Ok(true)
        }
        Command::Ingest {
            format,
            input,
            output,
        } => {
            let f = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let g = parse_edge_list(
                BufReader::new(f),
                matches!(format, Format::EdgelistWeighted),
            )?;
            save_binary(&g, &output)?;
            println!(
                "{} vertices, {} edges -> {}",
                g.num_vertices(),
                g.num_edges(),
                output.display()
            );
            Ok(true)
        }
        Command::Run {
            algo,
            source,
            graph,
            mode,
            predict,
            window,
            workers,
            page_cap,
            clock,
            trace,
            report,
            histogram,
            values_out,
            verify: check,
        } => {
            let edges = load_graph(&graph)?;
            let prepared = PreparedGraph::new(&edges, algo, page_cap)?;
            let program =
                VertexProgram::for_kind(algo, source, edges.num_vertices(), edges.is_weighted())?;
            let mut config = cell_config(mode, predict, workers, window, page_cap, clock);
            config.record_trace = trace.is_some();
            let (values, metrics) = engine::run(&prepared, &program, &config)?;

            let mut ok = true;
            if check {
                let oracle = reference_solve(&edges, algo, source)?;
                let v = verify(&values, &oracle)?;
                println!("verify: {v}");
                ok = v.passed();
            }
            println!(
                "{algo} {mode} predict={predict}: {} passes ({} dense, {} recovery), {} bytes moved, {} attempts, makespan {:.0} ns",
                metrics.passes,
                metrics.dense_passes,
                metrics.recovery_passes,
                metrics.bytes_transferred,
                metrics.update_attempts,
                metrics.virtual_makespan.max(metrics.wall_time),
            );
            if let Some(path) = values_out {
                let mut w = create(&path)?;
                write_values(&values, &mut w)?;
                w.flush()?;
            }
            if let (Some(path), Some(t)) = (trace, metrics.trace.as_ref()) {
                t.save_csv(&path)?;
            }
            if let Some(path) = histogram {
                write_histogram_csv(&status_histogram_report(&metrics)?, create(&path)?)?;
            }
            if let Some(path) = report {
                let name = graph.file_name().map_or_else(
                    || graph.display().to_string(),
                    |f| f.to_string_lossy().into_owned(),
                );
                let rows = vec![MatrixRow::from_run(
                    &name, &prepared, &config, algo, &metrics, ok,
                )];
                MatrixReport { rows }.save_csv(&path)?;
            }
            Ok(ok)
        }
        Command::Bench { spec, output } => {
            let spec = ExperimentSpec::load(&spec)
                .with_context(|| format!("reading {}", spec.display()))?;
            let report = run_matrix(&spec)?;
            report.save_csv(&output)?;
            let failed = report.rows.iter().filter(|r| !r.verified).count();
            println!(
                "{} rows -> {}, {failed} failed verification",
                report.rows.len(),
                output.display()
            );
            Ok(failed == 0)
        }
        Command::Verify {
            graph,
            algo,
            source,
            values,
        } => {
            let edges = load_graph(&graph)?;
            let f = File::open(&values).with_context(|| format!("opening {}", values.display()))?;
            let got = read_values(BufReader::new(f))?;
            let oracle = reference_solve(&edges, algo, source)?;
            let report = verify(&got, &oracle)?;
            println!("{report}");
            Ok(report.passed())
        }
    }
}
