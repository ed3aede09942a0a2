use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use dyngraph::analysis::graph_correlation_matrix_with;
use dyngraph::graph::WindowedSignals;
use dyngraph::solver::{step, SolverState};
use dyngraph::synth::{generate_with, ScenarioSpec};
use dyngraph::SolverConfig;

fn scenario(n_nodes: usize, windows: usize) -> ScenarioSpec {
    ScenarioSpec {
        n_nodes,
        k_true: n_nodes - 1,
        n_segments: 2,
        windows_per_segment: windows / 2,
        window_len: 100,
        noise_sigma: 0.1,
        smooth_gamma: 0.5,
        zero_node_fraction: 0.0,
        seed: 11,
    }
}

fn mode(parallel: bool) -> &'static str {
    if parallel {
        "parallel"
    } else {
        "sequential"
    }
}

fn bench_step(c: &mut Criterion) {
    let spec = scenario(50, 16);
    let truth = generate_with(&spec, true).unwrap();
    let y = WindowedSignals::split(&truth.signals, spec.window_len).unwrap();
    let mut group = c.benchmark_group("solver_step_n50_b16");
    for parallel in [false, true] {
        let mut cfg = SolverConfig::new(spec.k_true as f64, spec.window_len);
        cfg.parallel = parallel;
        let init = SolverState::init(&y, &cfg).unwrap();
        group.bench_with_input(
            BenchmarkId::from_parameter(mode(parallel)),
            &cfg,
            |b, cfg| {
                b.iter_batched(
                    || init.clone(),
                    |mut state| {
                        step(&mut state, &y, cfg).unwrap();
                        black_box(state.residual)
                    },
                    criterion::BatchSize::LargeInput,
                )
            },
        );
    }
    group.finish();
}

fn bench_fit(c: &mut Criterion) {
    let spec = scenario(20, 8);
    let truth = generate_with(&spec, true).unwrap();
    let mut group = c.benchmark_group("fit_dynamic_n20_b8_200iter");
    group.sample_size(10);
    for parallel in [false, true] {
        let mut cfg = SolverConfig::new(spec.k_true as f64, spec.window_len);
        cfg.parallel = parallel;
        cfg.max_iter = 200;
        group.bench_with_input(
            BenchmarkId::from_parameter(mode(parallel)),
            &cfg,
            |b, cfg| {
                b.iter(|| {
                    black_box(
                        dyngraph::fit_dynamic(&truth.signals, cfg)
                            .unwrap()
                            .report
                            .iterations,
                    )
                })
            },
        );
    }
    group.finish();
}

fn bench_correlation(c: &mut Criterion) {
    let spec = scenario(60, 64);
    let truth = generate_with(&spec, true).unwrap();
    let seq = truth.window_graphs(&spec);
    let mut group = c.benchmark_group("graph_correlation_b64");
    for parallel in [false, true] {
        group.bench_function(mode(parallel), |b| {
            b.iter(|| black_box(graph_correlation_matrix_with(&seq, parallel).unwrap()))
        });
    }
    group.finish();
}

fn bench_generate(c: &mut Criterion) {
    let spec = scenario(50, 16);
    let mut group = c.benchmark_group("synth_generate_n50_b16");
    group.sample_size(20);
    for parallel in [false, true] {
        group.bench_function(mode(parallel), |b| {
            b.iter(|| black_box(generate_with(&spec, parallel).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_step,
    bench_fit,
    bench_correlation,
    bench_generate
);
criterion_main!(benches);
