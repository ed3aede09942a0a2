//! Alternating solver for the dynamic graph learning problem.
//!
//! One iteration, for every window `t`:
//!
//! 1. `X_t ← (I + γL(W_t) − ηD(W_t))⁻¹ Y_t` (exact block minimizer),
//! 2. `W_t ← Π(W_t − τ₁ ∇_{W_t} 𝓛)` with `Π` the capped-simplex projection,
//! 3. Laplacian and degree matrices follow `W_t` (they are assembled on demand),
//! 4. `Z_t ← prox_{λf}(·)` with `f(z) = α‖z‖₁ + ⟨β_t, z⟩`,
//! 5. `β_t ← β_t ± τ₂ (Z_t − W_t + W_{t+1})`.
//!
//! `𝓛` is the Lagrangian of the split problem,
//! `Σ_t ‖Y_t − X_t‖² + tr(X_tᵀ(γL_t − ηD_t)X_t) + α Σ_t ‖Z_t‖₁ + Σ_t ⟨β_t, Z_t − W_t + W_{t+1}⟩`.
//! Steps 1 and 2 are independent across windows and run in parallel when the
//! `parallel` feature is on and [`SolverConfig::parallel`] is set.

use log::{debug, warn};
use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    edge_pairs, n_edges, objective, window_objective, EdgeVector, GraphSequence, SignalMatrix,
    WindowedSignals,
};
use crate::par;
use crate::projection::{check_budget, is_feasible, project_capped_simplex, DEFAULT_TOL};
use crate::prox::{prox_l1_linear, SplitVariable};

/// How the splitting variable is refreshed each iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZUpdate {
    /// `Z_t ← prox(W_t − W_{t+1})`: tracks the current primal difference.
    #[default]
    Anchored,
    /// `Z_t ← prox(Z_t)`: proximal-point iteration on `f` alone.
    Recursive,
}

/// Direction of the multiplier update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DualSign {
    /// `β ← β + τ₂ r`
    #[default]
    Ascent,
    /// `β ← β − τ₂ r`
    Descent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Smoothness weight γ.
    pub gamma: f64,
    /// Energy-penalty weight η.
    pub eta: f64,
    /// Temporal ℓ1 coupling α.
    pub alpha: f64,
    /// Proximal step λ.
    pub lambda: f64,
    /// Edge budget K, the required sum of every window's weights.
    pub k_budget: f64,
    /// Primal step τ₁.
    pub tau1: f64,
    /// Dual step τ₂.
    pub tau2: f64,
    pub max_iter: usize,
    pub tol_obj: f64,
    pub tol_residual: f64,
    pub z_update: ZUpdate,
    pub dual_sign: DualSign,
    /// Samples per window.
    pub window_len: usize,
    pub projection_tol: f64,
    /// Run per-window work on the rayon pool (no effect without the
    /// `parallel` feature).
    pub parallel: bool,
}

impl SolverConfig {
    pub const DEFAULT_GAMMA: f64 = 0.1;
    pub const DEFAULT_ETA: f64 = 0.05;
    pub const DEFAULT_ALPHA: f64 = 1.0;
    pub const DEFAULT_LAMBDA: f64 = 1.0;
    pub const DEFAULT_TAU: f64 = 1e-2;
    pub const DEFAULT_MAX_ITER: usize = 5000;
    pub const DEFAULT_TOL_OBJ: f64 = 1e-6;
    pub const DEFAULT_TOL_RESIDUAL: f64 = 1e-4;

    pub fn new(k_budget: f64, window_len: usize) -> Self {
        Self {
            gamma: Self::DEFAULT_GAMMA,
            eta: Self::DEFAULT_ETA,
            alpha: Self::DEFAULT_ALPHA,
            lambda: Self::DEFAULT_LAMBDA,
            k_budget,
            tau1: Self::DEFAULT_TAU,
            tau2: Self::DEFAULT_TAU,
            max_iter: Self::DEFAULT_MAX_ITER,
            tol_obj: Self::DEFAULT_TOL_OBJ,
            tol_residual: Self::DEFAULT_TOL_RESIDUAL,
            z_update: ZUpdate::default(),
            dual_sign: DualSign::default(),
            window_len,
            projection_tol: DEFAULT_TOL,
            parallel: true,
        }
    }

    /// Check parameter ranges for a graph on `n_nodes` nodes.
    ///
    /// `η(N − 1) < 1` guarantees `I + γL − ηD` is positive definite for every
    /// feasible `W`; violating it only produces a warning, since the actual
    /// degrees are usually far below `N − 1`.
    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        let nonneg = [
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("alpha", self.alpha),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        let positive = [
            ("lambda", self.lambda),
            ("tau1", self.tau1),
            ("tau2", self.tau2),
            ("tol_obj", self.tol_obj),
            ("tol_residual", self.tol_residual),
            ("projection_tol", self.projection_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "max_iter must be at least 1".into(),
            ));
        }
        if self.window_len == 0 {
            return Err(Error::InvalidParameter(
                "window_len must be at least 1".into(),
            ));
        }
        if n_nodes < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 nodes, got {n_nodes}"
            )));
        }
        check_budget(self.k_budget, n_edges(n_nodes))?;
        if self.eta * (n_nodes as f64 - 1.0) >= 1.0 {
            warn!(
                "eta = {} with {} nodes: eta*(N-1) >= 1, the X-update system may become singular",
                self.eta, n_nodes
            );
        }
        Ok(())
    }
}

/// Iterate of the solver.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub x: WindowedSignals,
    pub w: GraphSequence,
    /// One per adjacent window pair (`B − 1` entries).
    pub splits: Vec<SplitVariable>,
    pub iter: usize,
    /// Objective after each completed iteration.
    pub obj_history: Vec<f64>,
    /// `max_t ‖Z_t − W_t + W_{t+1}‖∞` after the last iteration.
    pub residual: f64,
}

impl SolverState {
    /// `W_t = K/M` everywhere, `X = Y`, `Z = 0`, `β = 0`.
    pub fn init(y: &WindowedSignals, cfg: &SolverConfig) -> Result<Self> {
        let n = y.n_nodes();
        cfg.validate(n)?;
        let uniform = EdgeVector::uniform(n, cfg.k_budget)?;
        let b = y.n_windows();
        Ok(Self {
            x: y.clone(),
            w: GraphSequence::new(vec![uniform; b], y.window_len)?,
            splits: vec![SplitVariable::zeros(n_edges(n)); b.saturating_sub(1)],
            iter: 0,
            obj_history: Vec::new(),
            residual: 0.0,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub converged: bool,
    pub iterations: usize,
    pub final_objective: f64,
    pub final_residual: f64,
    /// `‖W_t − W_{t+1}‖₁` for each adjacent pair.
    pub per_window_change: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct DynamicFit {
    pub graphs: GraphSequence,
    pub signals: WindowedSignals,
    pub report: FitReport,
    pub obj_history: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct StaticFit {
    pub graph: EdgeVector,
    pub signals: SignalMatrix,
    pub report: FitReport,
    pub obj_history: Vec<f64>,
}

/// Solve `(I + γL(W) − ηD(W)) X = Y` by Cholesky.
///
/// Fails with [`Error::SingularSystem`] (window 0; callers attach the real
/// window) when the matrix is not positive definite.
pub fn update_x(y: &DMatrix<f64>, w: &EdgeVector, gamma: f64, eta: f64) -> Result<DMatrix<f64>> {
    let n = w.n_nodes();
    if y.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "signal block has {} rows, graph has {n} nodes",
            y.nrows()
        )));
    }
    let mut a = DMatrix::identity(n, n);
    let degrees = w.degrees();
    for ((i, j), &wij) in edge_pairs(n).zip(w.weights()) {
        a[(i, j)] -= gamma * wij;
        a[(j, i)] -= gamma * wij;
    }
    for (i, d) in degrees.iter().enumerate() {
        a[(i, i)] += (gamma - eta) * d;
    }
    let chol = Cholesky::new(a.clone()).ok_or(Error::SingularSystem { window: 0 })?;
    let l_diag_min = chol.l_dirty().diagonal().min();
    if !(l_diag_min > 1e-8) {
        return Err(Error::SingularSystem { window: 0 });
    }
    let mut x = chol.solve(y);
    let y_norm = y.norm();
    let mut r = y - &a * &x;
    if r.norm() > 1e-8 * y_norm {
        // one step of iterative refinement
        x += chol.solve(&r);
        r = y - &a * &x;
        if r.norm() > 1e-8 * y_norm {
            return Err(Error::SingularSystem { window: 0 });
        }
    }
    Ok(x)
}

/// Per-edge `γ‖x_i − x_j‖² − η(‖x_i‖² + ‖x_j‖²)`, the derivative of
/// `tr(xᵀ(γL − ηD)x)` with respect to `w_ij`.
pub fn edge_gradient(x: &DMatrix<f64>, gamma: f64, eta: f64) -> Vec<f64> {
    let gram = x * x.transpose();
    edge_pairs(x.nrows())
        .map(|(i, j)| {
            let (gii, gjj, gij) = (gram[(i, i)], gram[(j, j)], gram[(i, j)]);
            gamma * (gii + gjj - 2.0 * gij) - eta * (gii + gjj)
        })
        .collect()
}

/// Gradient of the Lagrangian with respect to `W_t` (0-based `t`):
/// the edge gradient minus `β_t` plus `β_{t−1}`, where the missing
/// multipliers at the sequence ends count as zero.
pub fn grad_w(t: usize, state: &SolverState, cfg: &SolverConfig) -> Result<Vec<f64>> {
    let b = state.w.len();
    if t >= b {
        return Err(Error::InvalidInput(format!(
            "window index {t} out of range for {b} windows"
        )));
    }
    let mut g = edge_gradient(state.x.windows[t].as_matrix(), cfg.gamma, cfg.eta);
    if t + 1 < b {
        for (gi, bi) in g.iter_mut().zip(&state.splits[t].beta) {
            *gi -= bi;
        }
    }
    if t > 0 {
        for (gi, bi) in g.iter_mut().zip(&state.splits[t - 1].beta) {
            *gi += bi;
        }
    }
    Ok(g)
}

/// Lagrangian value of the split problem at `state`.
pub fn lagrangian(y: &WindowedSignals, state: &SolverState, cfg: &SolverConfig) -> Result<f64> {
    let mut total = 0.0;
    for ((yt, xt), wt) in y.windows.iter().zip(&state.x.windows).zip(&state.w.graphs) {
        total += window_objective(yt.as_matrix(), xt.as_matrix(), wt, cfg.gamma, cfg.eta)?;
    }
    for (t, split) in state.splits.iter().enumerate() {
        let (wt, wn) = (state.w.graphs[t].weights(), state.w.graphs[t + 1].weights());
        total += cfg.alpha * split.z.iter().map(|z| z.abs()).sum::<f64>();
        total += split
            .beta
            .iter()
            .zip(&split.z)
            .zip(wt.iter().zip(wn))
            .map(|((b, z), (a, c))| b * (z - a + c))
            .sum::<f64>();
    }
    Ok(total)
}

/// One pass of the update sequence over all windows.
pub fn step(state: &mut SolverState, y: &WindowedSignals, cfg: &SolverConfig) -> Result<()> {
    let b = y.n_windows();
    if state.w.len() != b || state.x.n_windows() != b || state.splits.len() != b.saturating_sub(1) {
        return Err(Error::DimensionMismatch(
            "solver state does not match the windowed signals".into(),
        ));
    }
    let iteration = state.iter + 1;
    let n = y.n_nodes();

    // X
    let graphs = &state.w.graphs;
    let xs = par::try_map_indexed(b, cfg.parallel, |t| {
        update_x(y.windows[t].as_matrix(), &graphs[t], cfg.gamma, cfg.eta)
            .map_err(|e| e.in_window(t + 1))
    })?;
    for (slot, x) in state.x.windows.iter_mut().zip(xs) {
        *slot = SignalMatrix::new(x).map_err(|_| Error::Divergence {
            iteration,
            value: f64::NAN,
        })?;
    }

    // W: gradient step then projection
    let st: &SolverState = state;
    let ws = par::try_map_indexed(b, cfg.parallel, |t| {
        let g = grad_w(t, st, cfg)?;
        let raw: Vec<f64> = st.w.graphs[t]
            .weights()
            .iter()
            .zip(&g)
            .map(|(w, g)| w - cfg.tau1 * g)
            .collect();
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                iteration,
                value: f64::NAN,
            });
        }
        let raw = EdgeVector::new(n, raw)?;
        Ok(project_capped_simplex(&raw, cfg.k_budget, cfg.projection_tol)?.projected)
    })?;
    state.w.graphs = ws;

    // L(W_t) and D(W_t) are rebuilt from the new weights where needed.

    // Z and β
    let mut residual: f64 = 0.0;
    for t in 0..b.saturating_sub(1) {
        let diff: Vec<f64> = state.w.graphs[t]
            .weights()
            .iter()
            .zip(state.w.graphs[t + 1].weights())
            .map(|(a, c)| a - c)
            .collect();
        let split = &mut state.splits[t];
        let v = match cfg.z_update {
            ZUpdate::Anchored => &diff,
            ZUpdate::Recursive => &split.z,
        };
        split.z = prox_l1_linear(v, cfg.alpha, &split.beta, cfg.lambda)?;
        let sign = match cfg.dual_sign {
            DualSign::Ascent => 1.0,
            DualSign::Descent => -1.0,
        };
        for ((beta, z), d) in split.beta.iter_mut().zip(&split.z).zip(&diff) {
            let r = z - d;
            *beta += sign * cfg.tau2 * r;
            residual = residual.max(r.abs());
        }
    }

    let obj = objective(y, &state.x, &state.w, cfg)?;
    if !obj.is_finite() {
        return Err(Error::Divergence {
            iteration,
            value: obj,
        });
    }
    state.obj_history.push(obj);
    state.residual = residual;
    state.iter = iteration;
    debug!("iter {iteration}: objective {obj:.6e}, residual {residual:.3e}");
    Ok(())
}

fn converged(prev: f64, obj: f64, residual: f64, cfg: &SolverConfig) -> bool {
    (obj - prev).abs() <= cfg.tol_obj * prev.abs().max(1.0) && residual <= cfg.tol_residual
}

/// Learn one graph per window of `y`.
pub fn fit_dynamic(y: &SignalMatrix, cfg: &SolverConfig) -> Result<DynamicFit> {
    let windows = WindowedSignals::split(y, cfg.window_len)?;
    let mut state = SolverState::init(&windows, cfg)?;
    let mut prev = objective(&windows, &state.x, &state.w, cfg)?;
    let mut done = false;
    while state.iter < cfg.max_iter {
        step(&mut state, &windows, cfg)?;
        let obj = *state
            .obj_history
            .last()
            .expect("step records the objective");
        if converged(prev, obj, state.residual, cfg) {
            done = true;
            break;
        }
        prev = obj;
    }
    for (t, g) in state.w.graphs.iter().enumerate() {
        debug_assert!(is_feasible(g, cfg.k_budget, 1e-6), "window {t} infeasible");
    }
    let report = FitReport {
        converged: done,
        iterations: state.iter,
        final_objective: state.obj_history.last().copied().unwrap_or(prev),
        final_residual: state.residual,
        per_window_change: state
            .w
            .graphs
            .windows(2)
            .map(|p| p[0].l1_distance(&p[1]))
            .collect(),
    };
    Ok(DynamicFit {
        graphs: state.w,
        signals: state.x,
        report,
        obj_history: state.obj_history,
    })
}

/// Learn a single graph from the whole record. `alpha`, `lambda`, `tau2` and
/// `window_len` are ignored.
pub fn fit_static(y: &SignalMatrix, cfg: &SolverConfig) -> Result<StaticFit> {
    let n = y.n_nodes();
    let mut cfg = cfg.clone();
    cfg.window_len = y.n_samples();
    cfg.validate(n)?;
    let ym = y.as_matrix();
    let mut w = EdgeVector::uniform(n, cfg.k_budget)?;
    let mut x = ym.clone();
    let mut prev = window_objective(ym, &x, &w, cfg.gamma, cfg.eta)?;
    let mut history = Vec::new();
    let mut done = false;
    while history.len() < cfg.max_iter {
        let iteration = history.len() + 1;
        x = update_x(ym, &w, cfg.gamma, cfg.eta).map_err(|e| e.in_window(1))?;
        let g = edge_gradient(&x, cfg.gamma, cfg.eta);
        let raw: Vec<f64> = w
            .weights()
            .iter()
            .zip(&g)
            .map(|(w, g)| w - cfg.tau1 * g)
            .collect();
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                iteration,
                value: f64::NAN,
            });
        }
        w = project_capped_simplex(&EdgeVector::new(n, raw)?, cfg.k_budget, cfg.projection_tol)?
            .projected;
        let obj = window_objective(ym, &x, &w, cfg.gamma, cfg.eta)?;
        if !obj.is_finite() {
            return Err(Error::Divergence {
                iteration,
                value: obj,
            });
        }
        history.push(obj);
        debug!("iter {iteration}: objective {obj:.6e}");
        if converged(prev, obj, 0.0, &cfg) {
            done = true;
            break;
        }
        prev = obj;
    }
    let report = FitReport {
        converged: done,
        iterations: history.len(),
        final_objective: history.last().copied().unwrap_or(prev),
        final_residual: 0.0,
        per_window_change: Vec::new(),
    };
    Ok(StaticFit {
        graph: w,
        signals: SignalMatrix::new(x)?,
        report,
        obj_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn update_x_identity_when_unregularized() {
        let y = dmatrix![1.0, -2.0; 3.5, 0.25];
        let w = EdgeVector::new(2, vec![1.0]).unwrap();
        assert_eq!(update_x(&y, &w, 0.0, 0.0).unwrap(), y);
    }

    #[test]
    fn update_x_two_node_example() {
        let w = EdgeVector::new(2, vec![1.0]).unwrap();
        let x = update_x(&dmatrix![3.0; 0.0], &w, 1.0, 0.0).unwrap();
        // (1/3)[[2,1],[1,2]] · [3,0]
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn update_x_singular() {
        let w = EdgeVector::new(2, vec![1.0]).unwrap();
        let err = update_x(&dmatrix![1.0; 1.0], &w, 0.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::SingularSystem { .. }));
        assert!(err.in_window(3).to_string().contains("window 3"));
    }

    #[test]
    fn gradient_examples() {
        let y = WindowedSignals {
            windows: vec![SignalMatrix::new(dmatrix![1.0; 0.0]).unwrap()],
            window_len: 1,
        };
        let cfg = SolverConfig {
            gamma: 1.0,
            eta: 0.1,
            ..SolverConfig::new(1.0, 1)
        };
        let state = SolverState::init(&y, &cfg).unwrap();
        let g = grad_w(0, &state, &cfg).unwrap();
        assert!((g[0] - 0.9).abs() < 1e-15);
        assert!(grad_w(1, &state, &cfg).is_err());

        // interior window of three, X = 0
        let zero = SignalMatrix::zeros(2, 1).unwrap();
        let y3 = WindowedSignals {
            windows: vec![zero.clone(), zero.clone(), zero],
            window_len: 1,
        };
        let mut state = SolverState::init(&y3, &cfg).unwrap();
        state.splits[0].beta = vec![0.2];
        state.splits[1].beta = vec![0.5];
        let g = grad_w(1, &state, &cfg).unwrap();
        assert!((g[0] + 0.3).abs() < 1e-15);
    }

    #[test]
    fn zero_signal_is_a_fixed_point() {
        let y = SignalMatrix::zeros(4, 6).unwrap();
        let cfg = SolverConfig::new(2.0, 3);
        let fit = fit_dynamic(&y, &cfg).unwrap();
        assert!(fit.report.converged);
        assert_eq!(fit.report.iterations, 1);
        assert_eq!(fit.report.final_objective, 0.0);
        let uniform = EdgeVector::uniform(4, 2.0).unwrap();
        assert!(fit.graphs.graphs.iter().all(|g| *g == uniform));

        let s = fit_static(&y, &cfg).unwrap();
        assert_eq!(s.graph, uniform);
        assert_eq!(s.report.final_objective, 0.0);
    }

    #[test]
    fn two_nodes_forced_edge() {
        let y = SignalMatrix::new(dmatrix![1.0, 2.0, -1.0; 0.5, 0.0, 3.0]).unwrap();
        let s = fit_static(&y, &SolverConfig::new(1.0, 3)).unwrap();
        assert_eq!(s.graph.weights(), &[1.0]);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::new(1.0, 4);
        assert!(cfg.validate(3).is_ok());
        cfg.k_budget = 4.0;
        assert!(matches!(
            cfg.validate(3),
            Err(Error::InfeasibleBudget { .. })
        ));
        cfg.k_budget = 1.0;
        cfg.lambda = 0.0;
        assert!(cfg.validate(3).is_err());
        cfg.lambda = 1.0;
        cfg.eta = -0.1;
        assert!(cfg.validate(3).is_err());
    }

    #[test]
    fn singular_window_is_named() {
        // N = 2, K = 1 forces w = [1]; with γ = 0, η = 1 the system is I − D = 0
        let y = SignalMatrix::new(dmatrix![1.0, 2.0; 0.0, 1.0]).unwrap();
        let cfg = SolverConfig {
            eta: 1.0,
            gamma: 0.0,
            ..SolverConfig::new(1.0, 1)
        };
        let err = fit_dynamic(&y, &cfg).unwrap_err();
        assert!(matches!(err, Error::SingularSystem { window: 1 }), "{err}");
    }
}
