//! Euclidean projection onto the capped simplex
//! `{w : 0 <= w_e <= 1, Σ_e w_e = K}`.
//!
//! The minimizer of `½‖w̃ − w‖²` over that set has the form
//! `w̃_e = clip(w_e − κ, 0, 1)` for a scalar shift `κ`. The map
//! `g(κ) = Σ_e clip(w_e − κ, 0, 1)` is continuous and non-increasing, so `κ`
//! is found by bisection on `g(κ) = K`, then polished by solving the linear
//! equation on the free set exactly.

use crate::error::{Error, Result};
use crate::graph::EdgeVector;

pub const DEFAULT_TOL: f64 = 1e-10;

/// Bisection stops once the bracket is narrower than this.
const MIN_BRACKET: f64 = 1e-14;
const MAX_BISECTIONS: usize = 200;

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionResult {
    pub projected: EdgeVector,
    /// Optimal shift, i.e. the multiplier of the sum constraint.
    pub kappa: f64,
    pub iterations: usize,
}

fn clipped_sum(w: &[f64], kappa: f64) -> f64 {
    w.iter().map(|&v| (v - kappa).clamp(0.0, 1.0)).sum()
}

pub(crate) fn check_budget(k: f64, n_edges: usize) -> Result<()> {
    if !(k > 0.0 && k <= n_edges as f64) {
        return Err(Error::InfeasibleBudget { k, n_edges });
    }
    Ok(())
}

/// Project `raw` onto the capped simplex with budget `k`.
pub fn project_capped_simplex(raw: &EdgeVector, k: f64, tol: f64) -> Result<ProjectionResult> {
    if raw.weights().iter().all(|v| (0.0..=1.0).contains(v)) && (raw.sum() - k).abs() <= tol {
        check_budget(k, raw.len())?;
        return Ok(ProjectionResult {
            projected: raw.clone(),
            kappa: 0.0,
            iterations: 0,
        });
    }
    let (projected, kappa, iterations) = project_weights(raw.weights(), k, tol)?;
    Ok(ProjectionResult {
        projected: EdgeVector::new(raw.n_nodes(), projected)?,
        kappa,
        iterations,
    })
}

/// Slice form of [`project_capped_simplex`] for vectors of any length.
/// Returns the projection, `κ` and the number of bisection steps.
pub fn project_weights(w: &[f64], k: f64, tol: f64) -> Result<(Vec<f64>, f64, usize)> {
    check_budget(k, w.len())?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "projection tol must be positive, got {tol}"
        )));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "projection input contains non-finite weights".into(),
        ));
    }

    let (min, max) = w
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    // g(lo) = M >= K, g(hi) = 0 < K
    let (mut lo, mut hi) = (min - 1.0, max);
    let mut kappa = 0.5 * (lo + hi);
    let mut iterations = 0;
    while iterations < MAX_BISECTIONS {
        iterations += 1;
        kappa = 0.5 * (lo + hi);
        let g = clipped_sum(w, kappa) - k;
        if g.abs() <= tol || hi - lo <= MIN_BRACKET {
            break;
        }
        if g > 0.0 {
            lo = kappa;
        } else {
            hi = kappa;
        }
    }

    let kappa = polish(w, k, kappa);
    let projected = w.iter().map(|&v| (v - kappa).clamp(0.0, 1.0)).collect();
    Ok((projected, kappa, iterations))
}

/// Solve `Σ_free (w − κ) + n_upper = K` exactly on the active set found at
/// `kappa`, keeping whichever of the two shifts meets the budget more closely.
/// With no free entries the multiplier is any point of a flat interval of `g`;
/// the midpoint of that interval is returned.
fn polish(w: &[f64], k: f64, kappa: f64) -> f64 {
    let mut free_sum = 0.0;
    let mut n_free = 0usize;
    let mut n_upper = 0usize;
    // bounds on κ that keep every clamped entry clamped
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for &v in w {
        let s = v - kappa;
        if s <= 0.0 {
            lower = lower.max(v);
        } else if s >= 1.0 {
            n_upper += 1;
            upper = upper.min(v - 1.0);
        } else {
            free_sum += v;
            n_free += 1;
        }
    }
    if n_free == 0 {
        return match (lower.is_finite(), upper.is_finite()) {
            (true, true) => 0.5 * (lower + upper),
            (true, false) => lower,
            (false, true) => upper,
            (false, false) => kappa,
        };
    }
    let exact = (free_sum + n_upper as f64 - k) / n_free as f64;
    if (clipped_sum(w, exact) - k).abs() <= (clipped_sum(w, kappa) - k).abs() {
        exact
    } else {
        kappa
    }
}

/// All weights in `[−tol, 1 + tol]` and `|Σw − K| <= tol`.
pub fn is_feasible(edges: &EdgeVector, k: f64, tol: f64) -> bool {
    edges.weights().iter().all(|&v| v >= -tol && v <= 1.0 + tol) && (edges.sum() - k).abs() <= tol
}
