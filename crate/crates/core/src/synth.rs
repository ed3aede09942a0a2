//! Synthetic benchmark scenarios with known graph sequences, and the metrics
//! used to score recovered graphs against them.
//!
//! Each segment holds a random graph with exactly `k_true` unit edges. Clean
//! signals of a window are `(I + γ_s L)⁻¹ ε` for white noise `ε`, which makes
//! them smooth on the segment's graph; observations add white noise of
//! standard deviation `noise_sigma`.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{edge_pairs, n_edges, EdgeVector, GraphSequence, SignalMatrix};
use crate::par;
use crate::solver::update_x;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n_nodes: usize,
    /// Edges per segment graph.
    pub k_true: usize,
    pub n_segments: usize,
    pub windows_per_segment: usize,
    pub window_len: usize,
    pub noise_sigma: f64,
    /// Strength of the smoothing filter used for clean signals.
    pub smooth_gamma: f64,
    /// Fraction of nodes whose clean signal is identically zero.
    pub zero_node_fraction: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn n_windows(&self) -> usize {
        self.n_segments * self.windows_per_segment
    }

    pub fn n_samples(&self) -> usize {
        self.n_windows() * self.window_len
    }

    pub fn n_zero_nodes(&self) -> usize {
        (self.zero_node_fraction * self.n_nodes as f64).floor() as usize
    }

    fn validate(&self) -> Result<()> {
        if self.n_nodes < 2 {
            return Err(Error::InvalidParameter(
                "scenario needs at least 2 nodes".into(),
            ));
        }
        if self.k_true == 0 || self.k_true > n_edges(self.n_nodes) {
            return Err(Error::InvalidParameter(format!(
                "k_true = {} outside 1..={}",
                self.k_true,
                n_edges(self.n_nodes)
            )));
        }
        if self.n_segments == 0 || self.windows_per_segment == 0 || self.window_len == 0 {
            return Err(Error::InvalidParameter(
                "segments, windows per segment and window length must be positive".into(),
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidParameter("noise_sigma must be >= 0".into()));
        }
        if !(self.smooth_gamma > 0.0 && self.smooth_gamma.is_finite()) {
            return Err(Error::InvalidParameter("smooth_gamma must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.zero_node_fraction) {
            return Err(Error::InvalidParameter(
                "zero_node_fraction must be in [0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    /// Binary graph of each segment.
    pub segments: Vec<EdgeVector>,
    /// Observations `Y = X + noise`.
    pub signals: SignalMatrix,
    /// Clean signals `X`.
    pub clean: SignalMatrix,
    /// 0-based index of the first window of every segment after the first.
    pub boundaries: Vec<usize>,
    /// Nodes whose clean signal is zero, ascending.
    pub zero_nodes: Vec<usize>,
}

impl GroundTruth {
    /// The true graph of every window.
    pub fn window_graphs(&self, spec: &ScenarioSpec) -> GraphSequence {
        let graphs = self
            .segments
            .iter()
            .flat_map(|g| std::iter::repeat_n(g.clone(), spec.windows_per_segment))
            .collect();
        GraphSequence {
            graphs,
            window_len: spec.window_len,
        }
    }
}

/// Draw a scenario. Output depends only on `spec` (including its seed).
pub fn generate(spec: &ScenarioSpec) -> Result<GroundTruth> {
    generate_with(spec, true)
}

/// [`generate`] with explicit control over parallel filtering of windows.
pub fn generate_with(spec: &ScenarioSpec, parallel: bool) -> Result<GroundTruth> {
    spec.validate()?;
    let n = spec.n_nodes;
    let s = spec.window_len;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut zero_nodes = sample(&mut rng, n, spec.n_zero_nodes()).into_vec();
    zero_nodes.sort_unstable();
    let mut is_zero = vec![false; n];
    for &z in &zero_nodes {
        is_zero[z] = true;
    }
    let eligible: Vec<usize> = edge_pairs(n)
        .enumerate()
        .filter(|(_, (i, j))| !is_zero[*i] && !is_zero[*j])
        .map(|(e, _)| e)
        .collect();
    if spec.k_true > eligible.len() {
        return Err(Error::InvalidParameter(format!(
            "k_true = {} exceeds the {} edges available between non-zero nodes",
            spec.k_true,
            eligible.len()
        )));
    }

    let segments = (0..spec.n_segments)
        .map(|_| {
            let mut w = vec![0.0; n_edges(n)];
            for idx in sample(&mut rng, eligible.len(), spec.k_true) {
                w[eligible[idx]] = 1.0;
            }
            EdgeVector::new(n, w)
        })
        .collect::<Result<Vec<_>>>()?;

    let b = spec.n_windows();
    let excitations: Vec<DMatrix<f64>> = (0..b)
        .map(|_| DMatrix::from_fn(n, s, |_, _| StandardNormal.sample(&mut rng)))
        .collect();
    let filtered = par::try_map_indexed(b, parallel, |t| {
        let graph = &segments[t / spec.windows_per_segment];
        update_x(&excitations[t], graph, spec.smooth_gamma, 0.0)
    })?;

    let mut clean = DMatrix::zeros(n, b * s);
    for (t, block) in filtered.iter().enumerate() {
        clean.columns_mut(t * s, s).copy_from(block);
    }
    for &z in &zero_nodes {
        clean.row_mut(z).fill(0.0);
    }
    let mut noisy = clean.clone();
    if spec.noise_sigma > 0.0 {
        for v in noisy.iter_mut() {
            let e: f64 = StandardNormal.sample(&mut rng);
            *v += spec.noise_sigma * e;
        }
    }

    Ok(GroundTruth {
        segments,
        signals: SignalMatrix::new(noisy)?,
        clean: SignalMatrix::new(clean)?,
        boundaries: (1..spec.n_segments)
            .map(|k| k * spec.windows_per_segment)
            .collect(),
        zero_nodes,
    })
}

/// Indices of the `k` largest weights; ties go to the lower edge index.
pub fn top_k_edges(weights: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// F1 score of the top-`k` edges of `estimated` against the binary `truth`.
pub fn edge_f1(estimated: &EdgeVector, truth: &EdgeVector, k: usize) -> Result<f64> {
    if estimated.n_nodes() != truth.n_nodes() {
        return Err(Error::DimensionMismatch(
            "estimate and truth differ in node count".into(),
        ));
    }
    if k > estimated.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds the {} edges",
            estimated.len()
        )));
    }
    let t = truth.weights();
    let n_true = t.iter().filter(|&&v| v != 0.0).count();
    let hits = top_k_edges(estimated.weights(), k)
        .into_iter()
        .filter(|&e| t[e] != 0.0)
        .count();
    if hits == 0 {
        return Ok(0.0);
    }
    let precision = hits as f64 / k as f64;
    let recall = hits as f64 / n_true as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// `‖W_t − W_{t+1}‖₁` for every adjacent pair.
pub fn change_profile(seq: &GraphSequence) -> Result<Vec<f64>> {
    if seq.len() < 2 {
        return Err(Error::InvalidInput(
            "change profile needs at least 2 graphs".into(),
        ));
    }
    Ok(seq
        .graphs
        .windows(2)
        .map(|p| p[0].l1_distance(&p[1]))
        .collect())
}
