mod common;

use common::{RefParams, RefState};
use dyngraph::graph::{GraphSequence, WindowedSignals};
use dyngraph::projection::is_feasible;
use dyngraph::solver::{lagrangian, step, SolverState};
use dyngraph::{fit_dynamic, fit_static, SignalMatrix, SolverConfig};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic 4-node record with 3 windows of 5 samples.
fn golden_record() -> DMatrix<f64> {
    DMatrix::from_fn(4, 15, |i, s| {
        let (i, s) = (i as f64, s as f64);
        (0.7 * s + 1.3 * i).sin() + 0.25 * (0.31 * s * (i + 1.0)).cos() + 0.1 * i
    })
}

fn golden_config() -> SolverConfig {
    let mut cfg = SolverConfig::new(2.5, 5);
    cfg.gamma = 0.5;
    cfg.eta = 0.05;
    cfg.alpha = 0.3;
    cfg.lambda = 0.7;
    cfg.tau1 = 0.05;
    cfg.tau2 = 0.1;
    cfg
}

fn ref_params(cfg: &SolverConfig) -> RefParams {
    RefParams {
        gamma: cfg.gamma,
        eta: cfg.eta,
        alpha: cfg.alpha,
        lambda: cfg.lambda,
        k: cfg.k_budget,
        tau1: cfg.tau1,
        tau2: cfg.tau2,
    }
}

#[test]
fn trace_matches_reference_implementation() {
    let cfg = golden_config();
    let y = WindowedSignals::split(&SignalMatrix::new(golden_record()).unwrap(), 5).unwrap();
    let blocks: Vec<DMatrix<f64>> = y.windows.iter().map(|w| w.as_matrix().clone()).collect();
    let mut state = SolverState::init(&y, &cfg).unwrap();
    let mut reference = RefState::new(&blocks, cfg.k_budget);
    let p = ref_params(&cfg);
    for _ in 0..25 {
        step(&mut state, &y, &cfg).unwrap();
        reference.step(&blocks, &p);
        let obj = *state.obj_history.last().unwrap();
        let want = reference.objective(&blocks, &p);
        assert!(
            (obj - want).abs() <= 1e-9 * want.abs().max(1.0),
            "{obj} vs {want}"
        );
        for (g, r) in state.w.graphs.iter().zip(&reference.w) {
            for (a, b) in g.weights().iter().zip(r) {
                assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
            }
        }
        for (s, (z, beta)) in state
            .splits
            .iter()
            .zip(reference.z.iter().zip(&reference.beta))
        {
            for (a, b) in s.z.iter().zip(z).chain(s.beta.iter().zip(beta)) {
                assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn golden_objective_values() {
    // frozen from the reference implementation in tests/common
    const GOLDEN: [(usize, f64); 3] = [(1, GOLDEN_1), (5, GOLDEN_5), (25, GOLDEN_25)];
    let cfg = golden_config();
    let y = WindowedSignals::split(&SignalMatrix::new(golden_record()).unwrap(), 5).unwrap();
    let mut state = SolverState::init(&y, &cfg).unwrap();
    for _ in 0..25 {
        step(&mut state, &y, &cfg).unwrap();
    }
    for (iter, want) in GOLDEN {
        let got = state.obj_history[iter - 1];
        assert!(
            (got - want).abs() <= 1e-9 * want.abs().max(1.0),
            "iteration {iter}: {got:.15e} vs {want:.15e}"
        );
    }
}

const GOLDEN_1: f64 = 14.311752477810652;
const GOLDEN_5: f64 = 13.286991208796094;
const GOLDEN_25: f64 = 8.906523930009115;

#[test]
fn objective_non_increasing_without_coupling_or_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..5 {
        let y = SignalMatrix::new(common::randn(&mut rng, 6, 40)).unwrap();
        let mut cfg = SolverConfig::new(4.0, 10);
        cfg.alpha = 0.0;
        cfg.eta = 0.0;
        cfg.gamma = 0.5;
        cfg.tau1 = 1e-3;
        let windows = WindowedSignals::split(&y, 10).unwrap();
        let mut state = SolverState::init(&windows, &cfg).unwrap();
        let mut prev = f64::INFINITY;
        for _ in 0..200 {
            step(&mut state, &windows, &cfg).unwrap();
            let obj = *state.obj_history.last().unwrap();
            assert!(obj <= prev + 1e-10, "objective rose from {prev} to {obj}");
            prev = obj;
        }
    }
}

#[test]
fn every_iterate_is_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let y = SignalMatrix::new(common::randn(&mut rng, 7, 60)).unwrap();
    let cfg = SolverConfig::new(5.5, 15);
    let windows = WindowedSignals::split(&y, 15).unwrap();
    let mut state = SolverState::init(&windows, &cfg).unwrap();
    for _ in 0..100 {
        step(&mut state, &windows, &cfg).unwrap();
        for g in &state.w.graphs {
            assert!(is_feasible(g, cfg.k_budget, 1e-9));
        }
    }
}

#[test]
fn lagrangian_equals_objective_when_split_is_exact() {
    // with Z = W_t − W_{t+1} the multiplier term vanishes
    let cfg = golden_config();
    let y = WindowedSignals::split(&SignalMatrix::new(golden_record()).unwrap(), 5).unwrap();
    let mut state = SolverState::init(&y, &cfg).unwrap();
    for _ in 0..3 {
        step(&mut state, &y, &cfg).unwrap();
    }
    for t in 0..state.splits.len() {
        let (a, b) = (
            state.w.graphs[t].weights().to_vec(),
            state.w.graphs[t + 1].weights().to_vec(),
        );
        state.splits[t].z = a.iter().zip(&b).map(|(a, b)| a - b).collect();
    }
    let obj = dyngraph::graph::objective(&y, &state.x, &state.w, &cfg).unwrap();
    let lag = lagrangian(&y, &state, &cfg).unwrap();
    assert!((obj - lag).abs() <= 1e-10 * obj.abs().max(1.0));
}

#[test]
fn single_window_matches_static_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..5 {
        let y = SignalMatrix::new(common::randn(&mut rng, 5, 30)).unwrap();
        let cfg = SolverConfig::new(3.0, 30);
        let d = fit_dynamic(&y, &cfg).unwrap();
        let s = fit_static(&y, &cfg).unwrap();
        assert_eq!(d.report.iterations, s.report.iterations);
        for (a, b) in d.graphs.graphs[0].weights().iter().zip(s.graph.weights()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn parallel_and_sequential_fits_agree_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let y = SignalMatrix::new(common::randn(&mut rng, 6, 80)).unwrap();
    let mut cfg = SolverConfig::new(4.0, 10);
    cfg.max_iter = 300;
    let a = fit_dynamic(&y, &cfg).unwrap();
    cfg.parallel = false;
    let b = fit_dynamic(&y, &cfg).unwrap();
    assert_eq!(a.obj_history, b.obj_history);
    assert_eq!(a.graphs, b.graphs);
}

#[test]
fn fit_report_is_consistent_with_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let y = SignalMatrix::new(common::randn(&mut rng, 5, 60)).unwrap();
    let cfg = SolverConfig::new(3.0, 20);
    let fit = fit_dynamic(&y, &cfg).unwrap();
    let seq: &GraphSequence = &fit.graphs;
    assert_eq!(fit.report.iterations, fit.obj_history.len());
    assert_eq!(fit.report.final_objective, *fit.obj_history.last().unwrap());
    let profile = dyngraph::synth::change_profile(seq).unwrap();
    assert_eq!(profile, fit.report.per_window_change);
}
