//! Straight-line reference implementations used as oracles. Nothing here
//! calls into the solver internals; shared code is limited to data types.
#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            out.push((i, j));
        }
    }
    out
}

pub fn randn(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random point of the capped simplex with budget `k`: a convex mix of the
/// uniform point and the projection of a random vector.
pub fn random_feasible(rng: &mut ChaCha8Rng, m: usize, k: f64) -> Vec<f64> {
    let mut w = vec![k / m as f64; m];
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..2.0)).collect();
    let target = project_sorted(&raw, k);
    let mix: f64 = rng.random_range(0.0..1.0);
    for (a, b) in w.iter_mut().zip(target) {
        *a = (1.0 - mix) * *a + mix * b;
    }
    w
}

fn clipped_sum(w: &[f64], kappa: f64) -> f64 {
    w.iter().map(|&v| (v - kappa).clamp(0.0, 1.0)).sum()
}

/// Exact capped-simplex projection by scanning the sorted breakpoints of the
/// piecewise-linear map `κ ↦ Σ clip(w − κ, 0, 1)` and interpolating.
pub fn project_sorted(w: &[f64], k: f64) -> Vec<f64> {
    let mut bps: Vec<f64> = w.iter().flat_map(|&v| [v - 1.0, v]).collect();
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    // g is non-increasing; find consecutive breakpoints a < b with g(a) >= k >= g(b)
    let mut kappa = bps[0];
    for pair in bps.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (ga, gb) = (clipped_sum(w, a), clipped_sum(w, b));
        if ga >= k && gb <= k {
            kappa = if ga == gb {
                0.5 * (a + b)
            } else {
                a + (ga - k) * (b - a) / (ga - gb)
            };
            break;
        }
    }
    w.iter().map(|&v| (v - kappa).clamp(0.0, 1.0)).collect()
}

/// Capped-simplex projection by enumerating all 3^M assignments of each
/// entry to {lower bound, upper bound, free} and keeping the assignment whose
/// KKT conditions hold.
pub fn project_enumerate(w: &[f64], k: f64) -> Option<Vec<f64>> {
    let m = w.len();
    let total = 3usize.pow(m as u32);
    let slack = 1e-12;
    let mut code = vec![0u8; m];
    for mut c in 0..total {
        for e in code.iter_mut() {
            *e = (c % 3) as u8;
            c /= 3;
        }
        let n_free = code.iter().filter(|&&e| e == 2).count();
        if n_free == 0 {
            continue;
        }
        let n_upper = code.iter().filter(|&&e| e == 1).count() as f64;
        let free_sum: f64 = w
            .iter()
            .zip(&code)
            .filter(|(_, &e)| e == 2)
            .map(|(v, _)| v)
            .sum();
        let kappa = (free_sum + n_upper - k) / n_free as f64;
        let ok = w.iter().zip(&code).all(|(&v, &e)| match e {
            0 => v - kappa <= slack,
            1 => v - kappa >= 1.0 - slack,
            _ => v - kappa >= -slack && v - kappa <= 1.0 + slack,
        });
        if ok {
            return Some(
                w.iter()
                    .zip(&code)
                    .map(|(&v, &e)| match e {
                        0 => 0.0,
                        1 => 1.0,
                        _ => v - kappa,
                    })
                    .collect(),
            );
        }
    }
    None
}

/// `I + γ(D − W) − ηD` from the dense adjacency.
pub fn system_matrix(n: usize, w: &[f64], gamma: f64, eta: f64) -> DMatrix<f64> {
    let mut adj = DMatrix::zeros(n, n);
    for (&(i, j), &v) in pairs(n).iter().zip(w) {
        adj[(i, j)] = v;
        adj[(j, i)] = v;
    }
    let deg = DMatrix::from_diagonal(&adj.column_sum());
    DMatrix::identity(n, n) + (&deg - &adj) * gamma - deg * eta
}

pub fn update_x_inverse(y: &DMatrix<f64>, w: &[f64], gamma: f64, eta: f64) -> DMatrix<f64> {
    let a = system_matrix(y.nrows(), w, gamma, eta);
    a.try_inverse().expect("reference system invertible") * y
}

/// Per-edge derivative of the window objective, summed sample by sample.
pub fn edge_gradient_sum(x: &DMatrix<f64>, gamma: f64, eta: f64) -> Vec<f64> {
    pairs(x.nrows())
        .iter()
        .map(|&(i, j)| {
            (0..x.ncols())
                .map(|s| {
                    let (a, b) = (x[(i, s)], x[(j, s)]);
                    gamma * (a - b).powi(2) - eta * (a * a + b * b)
                })
                .sum()
        })
        .collect()
}

/// Window objective as explicit sums over entries, edges and nodes.
pub fn window_objective_sum(
    y: &DMatrix<f64>,
    x: &DMatrix<f64>,
    w: &[f64],
    gamma: f64,
    eta: f64,
) -> f64 {
    let n = x.nrows();
    let fidelity: f64 = y.iter().zip(x.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let mut smooth = 0.0;
    let mut deg = vec![0.0; n];
    for (&(i, j), &v) in pairs(n).iter().zip(w) {
        deg[i] += v;
        deg[j] += v;
        for s in 0..x.ncols() {
            smooth += v * (x[(i, s)] - x[(j, s)]).powi(2);
        }
    }
    let energy: f64 = (0..n)
        .map(|i| deg[i] * (0..x.ncols()).map(|s| x[(i, s)].powi(2)).sum::<f64>())
        .sum();
    fidelity + gamma * smooth - eta * energy
}

pub fn soft(a: f64, s: f64) -> f64 {
    a.signum() * (a.abs() - s).max(0.0)
}

pub struct RefParams {
    pub gamma: f64,
    pub eta: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub k: f64,
    pub tau1: f64,
    pub tau2: f64,
}

pub struct RefState {
    pub x: Vec<DMatrix<f64>>,
    pub w: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
}

impl RefState {
    pub fn new(y: &[DMatrix<f64>], k: f64) -> Self {
        let n = y[0].nrows();
        let m = n * (n - 1) / 2;
        let b = y.len();
        Self {
            x: y.to_vec(),
            w: vec![vec![k / m as f64; m]; b],
            z: vec![vec![0.0; m]; b - 1],
            beta: vec![vec![0.0; m]; b - 1],
        }
    }

    pub fn objective(&self, y: &[DMatrix<f64>], p: &RefParams) -> f64 {
        let mut total = 0.0;
        for t in 0..y.len() {
            total += window_objective_sum(&y[t], &self.x[t], &self.w[t], p.gamma, p.eta);
        }
        for t in 0..y.len() - 1 {
            total += p.alpha
                * self.w[t]
                    .iter()
                    .zip(&self.w[t + 1])
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>();
        }
        total
    }

    /// One iteration with the default (anchored, ascent) updates.
    pub fn step(&mut self, y: &[DMatrix<f64>], p: &RefParams) {
        let b = y.len();
        for t in 0..b {
            self.x[t] = update_x_inverse(&y[t], &self.w[t], p.gamma, p.eta);
        }
        let mut new_w = Vec::with_capacity(b);
        for t in 0..b {
            let mut g = edge_gradient_sum(&self.x[t], p.gamma, p.eta);
            for (e, ge) in g.iter_mut().enumerate() {
                if t + 1 < b {
                    *ge -= self.beta[t][e];
                }
                if t > 0 {
                    *ge += self.beta[t - 1][e];
                }
            }
            let raw: Vec<f64> = self.w[t]
                .iter()
                .zip(&g)
                .map(|(w, g)| w - p.tau1 * g)
                .collect();
            new_w.push(project_sorted(&raw, p.k));
        }
        self.w = new_w;
        for t in 0..b - 1 {
            for e in 0..self.w[t].len() {
                let d = self.w[t][e] - self.w[t + 1][e];
                self.z[t][e] = soft(d - p.lambda * self.beta[t][e], p.lambda * p.alpha);
                self.beta[t][e] += p.tau2 * (self.z[t][e] - d);
            }
        }
    }
}
