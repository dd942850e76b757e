//! Parallel versus single-worker runs of the heavy loops. A single-worker
//! pool runs the same code as the sequential fallback; build with
//! `--no-default-features` to time that path directly.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use carpet_core::carpet::spec::{hollow_square_carpet, sierpinski_carpet};
use carpet_core::carpet::Carpet;
use carpet_core::cellgraph::partition::partition;
use carpet_core::cellgraph::CellGraph;
use carpet_core::constants::poincare::Evaluator;
use carpet_core::constants::table::{constants_row, DEFAULT_NODE_BUDGET};
use carpet_core::par;

const WORKERS: [(&str, usize); 2] = [("single", 1), ("pool", 0)];

fn graph_build(c: &mut Criterion) {
    let carpet = Carpet::new(hollow_square_carpet()).unwrap();
    let p = partition(&carpet, 3, DEFAULT_NODE_BUDGET).unwrap();
    let mut g = c.benchmark_group("hsc_graph_level3");
    for (name, threads) in WORKERS {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| par::with_threads(threads, || CellGraph::from_partition(&carpet, &p).unwrap()))
        });
    }
    g.finish();
}

fn constants(c: &mut Criterion) {
    let carpet = Carpet::new(sierpinski_carpet()).unwrap();
    let mut g = c.benchmark_group("sc_constants_m2");
    g.sample_size(10);
    for (name, threads) in WORKERS {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                par::with_threads(threads, || {
                    let ev = Evaluator::new(&carpet, DEFAULT_NODE_BUDGET, 1);
                    constants_row(&ev, 2, 1).unwrap()
                })
            })
        });
    }
    g.finish();
}

criterion_group!(benches, graph_build, constants);
criterion_main!(benches);
