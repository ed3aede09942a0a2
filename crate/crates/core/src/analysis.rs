//! Post-processing of learned graphs across trials: consistent-node
//! selection, cross-trial consensus and the graph-to-graph correlation matrix.

use log::warn;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{EdgeVector, GraphSequence, SignalMatrix};
use crate::par;

/// Repeated recordings of the same nodes under the same stimulus.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialSet {
    trials: Vec<SignalMatrix>,
}

impl TrialSet {
    pub fn new(trials: Vec<SignalMatrix>) -> Result<Self> {
        let Some(first) = trials.first() else {
            return Err(Error::InvalidInput("trial set is empty".into()));
        };
        let shape = (first.n_nodes(), first.n_samples());
        if let Some(i) = trials
            .iter()
            .position(|t| (t.n_nodes(), t.n_samples()) != shape)
        {
            return Err(Error::DimensionMismatch(format!(
                "trial {} differs in shape from trial 1",
                i + 1
            )));
        }
        Ok(Self { trials })
    }

    pub fn trials(&self) -> &[SignalMatrix] {
        &self.trials
    }

    pub fn n_nodes(&self) -> usize {
        self.trials[0].n_nodes()
    }
}

/// Pearson correlation; `None` when either input has zero variance.
pub fn pearson<'a>(
    a: impl IntoIterator<Item = &'a f64> + Clone,
    b: impl IntoIterator<Item = &'a f64> + Clone,
) -> Option<f64> {
    let (mut n, mut sa, mut sb) = (0usize, 0.0, 0.0);
    for (x, y) in a.clone().into_iter().zip(b.clone()) {
        n += 1;
        sa += x;
        sb += y;
    }
    if n == 0 {
        return None;
    }
    let (ma, mb) = (sa / n as f64, sb / n as f64);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.into_iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Mean over trial pairs of each node's signal correlation.
pub fn node_consistency(trials: &TrialSet) -> Result<Vec<f64>> {
    let k = trials.trials.len();
    if k < 2 {
        return Err(Error::InvalidInput(
            "node consistency needs at least 2 trials".into(),
        ));
    }
    let n_pairs = (k * (k - 1) / 2) as f64;
    let scores = par::map_indexed(trials.n_nodes(), true, |node| {
        let mut total = 0.0;
        let mut degenerate = false;
        for a in 0..k {
            for b in a + 1..k {
                let ra = trials.trials[a].as_matrix().row(node);
                let rb = trials.trials[b].as_matrix().row(node);
                match pearson(ra.iter(), rb.iter()) {
                    Some(c) => total += c,
                    None => degenerate = true,
                }
            }
        }
        (total / n_pairs, degenerate)
    });
    for (node, (_, degenerate)) in scores.iter().enumerate() {
        if *degenerate {
            warn!(
                "node {} has a constant signal in some trial; those pairs count as 0",
                node + 1
            );
        }
    }
    Ok(scores.into_iter().map(|(s, _)| s).collect())
}

/// The `top_k` nodes with the highest mean cross-trial correlation, best
/// first; ties go to the lower index.
pub fn select_consistent_nodes(trials: &TrialSet, top_k: usize) -> Result<Vec<usize>> {
    if top_k > trials.n_nodes() {
        return Err(Error::InvalidParameter(format!(
            "top_k = {top_k} exceeds {} nodes",
            trials.n_nodes()
        )));
    }
    let scores = node_consistency(trials)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(top_k);
    Ok(order)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsensusGraph {
    /// Number of trials whose graph keeps each edge.
    pub counts: Vec<usize>,
    /// 0/1 graph of edges with `count > count_threshold`.
    pub kept: EdgeVector,
    pub prob_threshold: f64,
    pub count_threshold: usize,
}

/// Binarize each trial's graph at `w >= prob_threshold`, count per edge, and
/// keep the edges counted strictly more than `count_threshold` times.
pub fn consensus(
    graph_per_trial: &[EdgeVector],
    prob_threshold: f64,
    count_threshold: usize,
) -> Result<ConsensusGraph> {
    let Some(first) = graph_per_trial.first() else {
        return Err(Error::InvalidInput(
            "consensus needs at least one trial graph".into(),
        ));
    };
    let n = first.n_nodes();
    if graph_per_trial.iter().any(|g| g.n_nodes() != n) {
        return Err(Error::DimensionMismatch(
            "trial graphs differ in node count".into(),
        ));
    }
    let mut counts = vec![0usize; first.len()];
    for g in graph_per_trial {
        for (c, &w) in counts.iter_mut().zip(g.weights()) {
            if w >= prob_threshold {
                *c += 1;
            }
        }
    }
    let kept = counts
        .iter()
        .map(|&c| if c > count_threshold { 1.0 } else { 0.0 })
        .collect();
    Ok(ConsensusGraph {
        counts,
        kept: EdgeVector::new(n, kept)?,
        prob_threshold,
        count_threshold,
    })
}

/// Pearson correlation between the edge vectors of every pair of graphs.
///
/// A graph with constant weights has undefined correlation; its off-diagonal
/// entries are set to 0.
pub fn graph_correlation_matrix(seq: &GraphSequence) -> Result<DMatrix<f64>> {
    graph_correlation_matrix_with(seq, true)
}

pub fn graph_correlation_matrix_with(seq: &GraphSequence, parallel: bool) -> Result<DMatrix<f64>> {
    let b = seq.len();
    if b < 2 {
        return Err(Error::InvalidInput(
            "correlation matrix needs at least 2 graphs".into(),
        ));
    }
    let rows = par::map_indexed(b, parallel, |s| {
        (0..b)
            .map(|t| {
                if s == t {
                    Some(1.0)
                } else {
                    pearson(seq.graphs[s].weights(), seq.graphs[t].weights())
                }
            })
            .collect::<Vec<_>>()
    });
    let mut out = DMatrix::zeros(b, b);
    let mut flat = Vec::new();
    for (s, row) in rows.into_iter().enumerate() {
        for (t, c) in row.into_iter().enumerate() {
            out[(s, t)] = c.unwrap_or_else(|| {
                flat.push(s);
                0.0
            });
        }
    }
    flat.sort_unstable();
    flat.dedup();
    for s in flat {
        if seq.graphs[s].weights().windows(2).all(|p| p[0] == p[1]) {
            warn!(
                "graph {} has constant edge weights; its correlations are set to 0",
                s + 1
            );
        }
    }
    Ok(out)
}
