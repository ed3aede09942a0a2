//! Signal and graph representations, Laplacian assembly and the terms of the
//! learning objective.
//!
//! Graphs are stored as [`EdgeVector`]s: the strict upper triangle of the
//! symmetric weight matrix in row-major order, `(0,1), (0,2), …, (0,N-1),
//! (1,2), …`. Dense Laplacian and degree matrices are assembled on demand.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::SolverConfig;

/// Number of node pairs `N(N-1)/2`.
pub const fn n_edges(n_nodes: usize) -> usize {
    n_nodes * n_nodes.saturating_sub(1) / 2
}

/// Position of the pair `(i, j)`, `i < j`, in canonical edge order.
pub fn edge_index(n_nodes: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n_nodes);
    i * (2 * n_nodes - i - 1) / 2 + (j - i - 1)
}

/// Iterator over node pairs in canonical edge order.
pub fn edge_pairs(n_nodes: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n_nodes).flat_map(move |i| (i + 1..n_nodes).map(move |j| (i, j)))
}

/// An `N × T` matrix of node observations, rows are nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalMatrix {
    values: DMatrix<f64>,
}

impl SignalMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 2 {
            return Err(Error::InvalidInput(format!(
                "signal matrix needs at least 2 nodes, got {}",
                values.nrows()
            )));
        }
        if values.ncols() == 0 {
            return Err(Error::InvalidInput("signal matrix has no samples".into()));
        }
        if let Some((idx, _)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            // column-major storage
            let (r, c) = (idx % values.nrows(), idx / values.nrows());
            return Err(Error::InvalidInput(format!(
                "non-finite value at node {}, sample {}",
                r + 1,
                c + 1
            )));
        }
        Ok(Self { values })
    }

    pub fn zeros(n_nodes: usize, n_samples: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(n_nodes, n_samples))
    }

    pub fn n_nodes(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.values.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.values
    }

    /// Restrict to a subset of nodes, in the given order.
    pub fn select_nodes(&self, nodes: &[usize]) -> Result<Self> {
        if let Some(&bad) = nodes.iter().find(|&&n| n >= self.n_nodes()) {
            return Err(Error::InvalidInput(format!(
                "node index {bad} out of range"
            )));
        }
        Self::new(self.values.select_rows(nodes))
    }
}

/// A record cut into `B` equal windows of `S` samples each.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowedSignals {
    pub windows: Vec<SignalMatrix>,
    pub window_len: usize,
}

impl WindowedSignals {
    /// Partition `signals` into consecutive windows of `window_len` samples.
    /// Trailing samples that do not fill a whole window are dropped.
    pub fn split(signals: &SignalMatrix, window_len: usize) -> Result<Self> {
        if window_len == 0 {
            return Err(Error::InvalidParameter(
                "window length must be positive".into(),
            ));
        }
        let n_windows = signals.n_samples() / window_len;
        if n_windows == 0 {
            return Err(Error::InvalidInput(format!(
                "record has {} samples, fewer than one window of {window_len}",
                signals.n_samples()
            )));
        }
        let windows = (0..n_windows)
            .map(|b| {
                SignalMatrix::new(
                    signals
                        .as_matrix()
                        .columns(b * window_len, window_len)
                        .into_owned(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            windows,
            window_len,
        })
    }

    pub fn n_windows(&self) -> usize {
        self.windows.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.windows[0].n_nodes()
    }

    /// Concatenate the windows back into one `N × (B·S)` matrix.
    pub fn concat(&self) -> SignalMatrix {
        let n = self.n_nodes();
        let s = self.window_len;
        let mut out = DMatrix::zeros(n, s * self.n_windows());
        for (b, w) in self.windows.iter().enumerate() {
            out.columns_mut(b * s, s).copy_from(w.as_matrix());
        }
        SignalMatrix { values: out }
    }
}

/// Upper-triangular edge weights of an undirected graph without self-loops.
///
/// A solver-produced vector is feasible: every weight in `[0, 1]` and the
/// weights sum to the edge budget. Intermediate (pre-projection) vectors may
/// violate both; the code holding them is responsible for projecting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeVector {
    n_nodes: usize,
    weights: Vec<f64>,
}

impl EdgeVector {
    pub fn new(n_nodes: usize, weights: Vec<f64>) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::InvalidInput(format!(
                "graph needs at least 2 nodes, got {n_nodes}"
            )));
        }
        if weights.len() != n_edges(n_nodes) {
            return Err(Error::DimensionMismatch(format!(
                "{} edge weights for {n_nodes} nodes (expected {})",
                weights.len(),
                n_edges(n_nodes)
            )));
        }
        Ok(Self { n_nodes, weights })
    }

    pub fn zeros(n_nodes: usize) -> Result<Self> {
        Self::new(n_nodes, vec![0.0; n_edges(n_nodes)])
    }

    /// Every edge carries `k / M`; feasible for any `0 < k <= M`.
    pub fn uniform(n_nodes: usize, k: f64) -> Result<Self> {
        let m = n_edges(n_nodes);
        Self::new(n_nodes, vec![k / m as f64; m])
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    /// Weight of the pair `{i, j}`; zero on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.weights[edge_index(self.n_nodes, i, j)],
            std::cmp::Ordering::Greater => self.weights[edge_index(self.n_nodes, j, i)],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite())
    }

    /// `‖self − other‖₁` over edges.
    pub fn l1_distance(&self, other: &EdgeVector) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Dense symmetric weight matrix `W` with zero diagonal.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let n = self.n_nodes;
        let mut w = DMatrix::zeros(n, n);
        for ((i, j), &v) in edge_pairs(n).zip(&self.weights) {
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
        w
    }

    /// Node degrees `d_i = Σ_j w_ij`.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_nodes];
        for ((i, j), &v) in edge_pairs(self.n_nodes).zip(&self.weights) {
            d[i] += v;
            d[j] += v;
        }
        d
    }

    /// Apply a node relabeling: node `i` becomes `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n_nodes {
            return Err(Error::DimensionMismatch("permutation length".into()));
        }
        let mut out = vec![0.0; self.weights.len()];
        for ((i, j), &v) in edge_pairs(self.n_nodes).zip(&self.weights) {
            let (a, b) = (perm[i], perm[j]);
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            out[edge_index(self.n_nodes, a, b)] = v;
        }
        Self::new(self.n_nodes, out)
    }
}

/// One graph per window.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSequence {
    pub graphs: Vec<EdgeVector>,
    pub window_len: usize,
}

impl GraphSequence {
    pub fn new(graphs: Vec<EdgeVector>, window_len: usize) -> Result<Self> {
        let Some(first) = graphs.first() else {
            return Err(Error::InvalidInput("empty graph sequence".into()));
        };
        let n = first.n_nodes();
        if graphs.iter().any(|g| g.n_nodes() != n) {
            return Err(Error::DimensionMismatch(
                "graphs in a sequence must share the node count".into(),
            ));
        }
        Ok(Self { graphs, window_len })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn n_nodes(&self) -> usize {
        self.graphs[0].n_nodes()
    }
}

/// Combinatorial Laplacian `L = D − W`.
pub fn laplacian(edges: &EdgeVector) -> DMatrix<f64> {
    let n = edges.n_nodes();
    let mut l = DMatrix::zeros(n, n);
    for ((i, j), &w) in edge_pairs(n).zip(edges.weights()) {
        l[(i, j)] -= w;
        l[(j, i)] -= w;
        l[(i, i)] += w;
        l[(j, j)] += w;
    }
    l
}

/// Diagonal degree matrix `D`.
pub fn degree_matrix(edges: &EdgeVector) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(edges.degrees()))
}

fn check_block(edges: &EdgeVector, x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() != edges.n_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "signal block has {} rows, graph has {} nodes",
            x.nrows(),
            edges.n_nodes()
        )));
    }
    Ok(())
}

/// `tr(xᵀ L(W) x)`, the graph smoothness of the rows of `x`.
pub fn smoothness_term(edges: &EdgeVector, x: &DMatrix<f64>) -> Result<f64> {
    check_block(edges, x)?;
    let lx = laplacian(edges) * x;
    Ok(x.dot(&lx))
}

/// `tr(xᵀ D(W) x) = Σ_i d_i ‖x_i‖²`. The caller applies the `−η` factor.
pub fn energy_penalty_term(edges: &EdgeVector, x: &DMatrix<f64>) -> Result<f64> {
    check_block(edges, x)?;
    let dx = degree_matrix(edges) * x;
    Ok(x.dot(&dx))
}

/// Value of the dynamic objective
///
/// `Σ_t ‖Y_t − X_t‖² + γ tr(X_tᵀ L_t X_t) − η tr(X_tᵀ D_t X_t) + α Σ_t ‖W_t − W_{t+1}‖₁`.
pub fn objective(
    y: &WindowedSignals,
    x: &WindowedSignals,
    w: &GraphSequence,
    cfg: &SolverConfig,
) -> Result<f64> {
    let b = y.n_windows();
    if b == 0 || x.n_windows() != b || w.len() != b {
        return Err(Error::DimensionMismatch(format!(
            "objective needs matching window counts (Y {b}, X {}, W {})",
            x.n_windows(),
            w.len()
        )));
    }
    let mut total = 0.0;
    for ((yt, xt), wt) in y.windows.iter().zip(&x.windows).zip(&w.graphs) {
        total += window_objective(yt.as_matrix(), xt.as_matrix(), wt, cfg.gamma, cfg.eta)?;
    }
    total += cfg.alpha * temporal_variation(w);
    Ok(total)
}

/// Per-window part of the objective: fidelity, smoothness and energy penalty.
pub fn window_objective(
    y: &DMatrix<f64>,
    x: &DMatrix<f64>,
    w: &EdgeVector,
    gamma: f64,
    eta: f64,
) -> Result<f64> {
    if y.shape() != x.shape() {
        return Err(Error::DimensionMismatch(format!(
            "Y block {:?} vs X block {:?}",
            y.shape(),
            x.shape()
        )));
    }
    check_block(w, x)?;
    let fidelity = (y - x).norm_squared();
    // tr(xᵀ (γL − ηD) x) in one product
    let mut a = laplacian(w) * gamma;
    for (i, d) in w.degrees().into_iter().enumerate() {
        a[(i, i)] -= eta * d;
    }
    Ok(fidelity + x.dot(&(a * x)))
}

/// `Σ_t ‖W_t − W_{t+1}‖₁`.
pub fn temporal_variation(w: &GraphSequence) -> f64 {
    w.graphs.windows(2).map(|p| p[0].l1_distance(&p[1])).sum()
}
