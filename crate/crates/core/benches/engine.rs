//! Sequential against rayon-backed execution: full wall-clock runs and a
//! single sparse push pass.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use pagestream::algorithms::{ProgramKind, VertexProgram, VertexValues};
use pagestream::bench::{cell_config, rmat_graph};
use pagestream::engine::kernel::PassFlags;
use pagestream::engine::{run, sparse_push_pass, PreparedGraph};
use pagestream::par::Workers;
use pagestream::predictor::{PredictorMode, PredictorState};
use pagestream::scheduler::{ClockMode, ScheduleMode};

const WORKERS: [usize; 2] = [1, 4];

fn wall_runs(c: &mut Criterion) {
    let edges = rmat_graph(14, 16, 0, None).unwrap();
    let g = PreparedGraph::new(&edges, ProgramKind::Cc, None).unwrap();
    let p = VertexProgram::cc();
    let mut group = c.benchmark_group("cc_wall_run");
    group.sample_size(10);
    group.throughput(Throughput::Elements(g.num_edges() as u64));
    for mode in [ScheduleMode::Baseline, ScheduleMode::PipelinedFine] {
        for w in WORKERS {
            let cfg = cell_config(mode, PredictorMode::Off, w, 8, None, ClockMode::Wall);
            group.bench_with_input(BenchmarkId::new(mode.name(), w), &cfg, |b, cfg| {
                b.iter(|| run(&g, &p, cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn sparse_push(c: &mut Criterion) {
    let edges = rmat_graph(15, 16, 1, None).unwrap();
    let g = PreparedGraph::new(&edges, ProgramKind::Cc, None).unwrap();
    let p = VertexProgram::cc();
    let n = g.num_vertices();
    let frontier: Vec<u32> = (0..n as u32).collect();
    let predictor = PredictorState::new(PredictorMode::Off, ProgramKind::Cc, n);
    let mut group = c.benchmark_group("sparse_push_full_frontier");
    group.throughput(Throughput::Elements(g.num_edges() as u64));
    for w in WORKERS {
        let workers = Workers::new(w).unwrap();
        group.bench_function(BenchmarkId::from_parameter(w), |b| {
            b.iter_batched(
                || (VertexValues::init(&p, n), PassFlags::new(n)),
                |(values, flags)| {
                    sparse_push_pass(
                        g.csr(),
                        &values,
                        &frontier,
                        &p,
                        &predictor,
                        &flags,
                        &workers,
                    )
                },
                criterion::BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, wall_runs, sparse_push);
criterion_main!(benches);
