//! Proximal operator of `f(z) = α‖z‖₁ + ⟨β, z⟩`.
//!
//! `prox_{λf}(v) = argmin_z f(z) + ‖z − v‖² / (2λ)` separates per coordinate
//! and has the closed form `soft(v − λβ, λα)`.

use crate::error::{Error, Result};

/// Splitting variable `z ≈ W_t − W_{t+1}` and its multiplier.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitVariable {
    pub z: Vec<f64>,
    pub beta: Vec<f64>,
}

impl SplitVariable {
    pub fn zeros(n_edges: usize) -> Self {
        Self {
            z: vec![0.0; n_edges],
            beta: vec![0.0; n_edges],
        }
    }

    /// True when every `z` entry lies in `[−1, 1]`, as it must at a primal
    /// feasible point. Diagnostic only.
    pub fn z_in_range(&self) -> bool {
        self.z.iter().all(|v| (-1.0..=1.0).contains(v))
    }
}

/// `sign(a) · max(|a| − s, 0)`.
#[inline]
pub fn soft_threshold(a: f64, s: f64) -> f64 {
    debug_assert!(s >= 0.0);
    if a > s {
        a - s
    } else if a < -s {
        a + s
    } else {
        0.0
    }
}

/// Closed-form `prox_{λf}(v)` for `f(z) = α‖z‖₁ + ⟨β, z⟩`.
pub fn prox_l1_linear(v: &[f64], alpha: f64, beta: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "prox step lambda must be positive, got {lambda}"
        )));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be non-negative, got {alpha}"
        )));
    }
    if v.len() != beta.len() {
        return Err(Error::DimensionMismatch(format!(
            "prox argument has {} entries, beta has {}",
            v.len(),
            beta.len()
        )));
    }
    let s = lambda * alpha;
    Ok(v.iter()
        .zip(beta)
        .map(|(&vi, &bi)| soft_threshold(vi - lambda * bi, s))
        .collect())
}
