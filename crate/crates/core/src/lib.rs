//! Learning temporally smooth sequences of sparse weighted graphs from
//! multivariate time series.
//!
//! Each window `t` of the record gets a graph `W_t` with weights in `[0, 1]`
//! summing to an edge budget `K`. The graphs, together with denoised signals
//! `X_t`, minimize
//!
//! ```text
//! Σ_t ‖Y_t − X_t‖² + γ tr(X_tᵀ L(W_t) X_t) − η tr(X_tᵀ D(W_t) X_t) + α Σ_t ‖W_t − W_{t+1}‖₁
//! ```
//!
//! where `L = D − W` is the graph Laplacian. The `−η` energy term steers edges
//! away from silent nodes, which the smoothness term alone happily connects.
//!
//! Modules:
//!
//! - [`graph`]: signal and edge-vector types, Laplacian and objective terms
//! - [`projection`]: projection onto `{0 <= w <= 1, Σw = K}`
//! - [`prox`]: soft-threshold proximal operator for the temporal coupling
//! - [`solver`]: the alternating solver, dynamic and static
//! - [`synth`]: synthetic scenarios with known graphs, recovery metrics
//! - [`analysis`]: cross-trial consensus and graph correlation
//! - [`cli`]: file formats and the command-line front end

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod graph;
pub mod par;
pub mod projection;
pub mod prox;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{EdgeVector, GraphSequence, SignalMatrix, WindowedSignals};
pub use solver::{fit_dynamic, fit_static, DualSign, FitReport, SolverConfig, ZUpdate};
