use criterion::{black_box, criterion_group, criterion_main, Criterion};

use flowdec::{shortest_path_lmo, solve, SolverConfig};
use flowdec_bench::mid_instance;

const SUITE: &str = include_str!("../../../data/suite.graph");

fn solver_benches(c: &mut Criterion) {
    let inst = mid_instance();
    c.bench_function("solve least squares 120 edges", |b| {
        b.iter(|| {
            solve(
                black_box(&inst.graph),
                black_box(&inst.flow),
                &SolverConfig::least_squares(),
            )
            .unwrap()
        })
    });
    // The Poisson gap tolerance is unreachable on noiseless inputs, so cap
    // the iterations to measure per-iteration cost instead of the limit.
    let capped = SolverConfig {
        max_iterations: 500,
        ..SolverConfig::poisson()
    };
    c.bench_function("solve poisson 500 iterations", |b| {
        b.iter(|| solve(black_box(&inst.graph), black_box(&inst.flow), &capped).unwrap())
    });
}

fn lmo_bench(c: &mut Criterion) {
    let inst = mid_instance();
    let costs: Vec<f64> = inst
        .flow
        .values()
        .iter()
        .enumerate()
        .map(|(e, &v)| if e % 3 == 0 { -v } else { v })
        .collect();
    c.bench_function("shortest path lmo 120 edges", |b| {
        b.iter(|| shortest_path_lmo(black_box(&inst.graph), black_box(&costs)).unwrap())
    });
}

fn parse_bench(c: &mut Criterion) {
    c.bench_function("parse bundled suite", |b| {
        b.iter(|| flowdec::io::parse_graphs(black_box(SUITE)).unwrap())
    });
}

criterion_group!(benches, solver_benches, lmo_bench, parse_bench);
criterion_main!(benches);
