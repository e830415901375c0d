//! Fuzzy k-means (Bezdek) for scalar observations with squared Euclidean
//! distance.
//!
//! Minimizes `sum_t sum_j u_tj^m (y_t - c_j)^2` by alternating the centroid
//! and membership updates. Memberships are computed in log space so small
//! fuzziness exponents do not overflow.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{MsError, Result};
use crate::rng::stream_rng;
use crate::stats::{quantile_sorted, sd_ml};
use crate::types::{descending_order, MembershipMatrix, PermuteStates};

pub const DEFAULT_FUZZINESS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FuzzyConfig {
    pub n_starts: usize,
    pub max_iter: usize,
    /// Stop when no membership changes by more than this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for FuzzyConfig {
    fn default() -> Self {
        FuzzyConfig {
            n_starts: 10,
            max_iter: 300,
            tol: 1e-9,
            seed: 0,
        }
    }
}

impl FuzzyConfig {
    pub fn with_seed(seed: u64) -> Self {
        FuzzyConfig {
            seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct FuzzyResult {
    pub membership: MembershipMatrix,
    /// Sorted descending; membership columns follow the same order.
    pub centroids: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each membership update of the winning start.
    pub objective_trace: Vec<f64>,
}

struct Run {
    u: Vec<f64>,
    c: Vec<f64>,
    objective: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

fn update_memberships(y: &[f64], c: &[f64], m: f64, u: &mut [f64]) {
    let k = c.len();
    let e = 1.0 / (m - 1.0);
    let mut w = vec![0.0; k];
    for (t, &yt) in y.iter().enumerate() {
        let row = &mut u[t * k..(t + 1) * k];
        if let Some(hit) = c.iter().position(|&cj| yt == cj) {
            row.iter_mut().for_each(|v| *v = 0.0);
            row[hit] = 1.0;
            continue;
        }
        let mut max = f64::NEG_INFINITY;
        for j in 0..k {
            w[j] = -e * (yt - c[j]).powi(2).ln();
            max = max.max(w[j]);
        }
        let mut total = 0.0;
        for j in 0..k {
            row[j] = (w[j] - max).exp();
            total += row[j];
        }
        row.iter_mut().for_each(|v| *v /= total);
    }
}

fn update_centroids(y: &[f64], u: &[f64], m: f64, c: &mut [f64]) {
    let k = c.len();
    for j in 0..k {
        let (mut num, mut den) = (0.0, 0.0);
        for (t, &yt) in y.iter().enumerate() {
            let w = u[t * k + j].powf(m);
            num += w * yt;
            den += w;
        }
        if den > 0.0 {
            c[j] = num / den;
        }
    }
}

/// `sum_t sum_j u_tj^m d^2(y_t, c_j)`.
pub fn fuzzy_objective(y: &[f64], u: &MembershipMatrix, c: &[f64], m: f64) -> f64 {
    let mut total = 0.0;
    for (t, &yt) in y.iter().enumerate() {
        for (j, &cj) in c.iter().enumerate() {
            total += u.get(t, j).powf(m) * (yt - cj).powi(2);
        }
    }
    total
}

fn objective_raw(y: &[f64], u: &[f64], c: &[f64], m: f64) -> f64 {
    let k = c.len();
    y.iter()
        .enumerate()
        .map(|(t, &yt)| {
            (0..k)
                .map(|j| u[t * k + j].powf(m) * (yt - c[j]).powi(2))
                .sum::<f64>()
        })
        .sum()
}

fn run_from(y: &[f64], mut c: Vec<f64>, m: f64, cfg: &FuzzyConfig) -> Run {
    let k = c.len();
    let mut u = vec![0.0; y.len() * k];
    let mut next = u.clone();
    update_memberships(y, &c, m, &mut u);
    let mut trace = vec![objective_raw(y, &u, &c, m)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        update_centroids(y, &u, m, &mut c);
        update_memberships(y, &c, m, &mut next);
        let delta = u
            .iter()
            .zip(&next)
            .fold(0.0f64, |d, (a, b)| d.max((a - b).abs()));
        std::mem::swap(&mut u, &mut next);
        trace.push(objective_raw(y, &u, &c, m));
        if delta < cfg.tol {
            converged = true;
            break;
        }
    }
    Run {
        objective: *trace.last().unwrap(),
        u,
        c,
        iterations,
        converged,
        trace,
    }
}

/// Start 0 uses the quantiles `(j + 0.5) / k`, start 1 spreads centroids
/// evenly over the data range, and later starts pick data points by
/// D^2 sampling (k-means++) plus a small Normal jitter.
fn initial_centroids<R: Rng>(sorted: &[f64], k: usize, start: usize, spread: f64, rng: &mut R) -> Vec<f64> {
    match start {
        0 => {
            return (0..k)
                .map(|j| quantile_sorted(sorted, (j as f64 + 0.5) / k as f64))
                .collect()
        }
        1 => {
            let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
            return (0..k)
                .map(|j| lo + (hi - lo) * (j as f64 + 0.5) / k as f64)
                .collect();
        }
        _ => {}
    }
    let jitter = Normal::new(0.0, 0.05 * spread).expect("finite spread");
    let mut centroids = vec![sorted[rng.random_range(0..sorted.len())]];
    let mut d2: Vec<f64> = sorted.iter().map(|v| (v - centroids[0]).powi(2)).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = sorted.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if u < *w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            sorted[pick]
        } else {
            sorted[rng.random_range(0..sorted.len())]
        };
        d2.iter_mut()
            .zip(sorted)
            .for_each(|(d, v)| *d = d.min((v - next).powi(2)));
        centroids.push(next);
    }
    centroids.iter().map(|c| c + jitter.sample(rng)).collect()
}

/// Best of `cfg.n_starts` runs (by final objective), relabeled so centroids
/// are in descending order.
pub fn fuzzy_kmeans(y: &[f64], k: usize, m: f64, cfg: &FuzzyConfig) -> Result<FuzzyResult> {
    if k == 0 {
        return Err(MsError::InvalidArgument("k must be at least 1".into()));
    }
    if !(m > 1.0) || !m.is_finite() {
        return Err(MsError::InvalidArgument(format!("fuzziness m = {m} must exceed 1")));
    }
    if y.len() < k {
        return Err(MsError::InsufficientData { needed: k, got: y.len() });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(MsError::InvalidSeries("non-finite observation".into()));
    }
    let spread = sd_ml(y);
    if k > 1 && spread == 0.0 {
        return Err(MsError::DegenerateData { k });
    }
    let mut sorted = y.to_vec();
    sorted.sort_by(f64::total_cmp);

    let mut best: Option<Run> = None;
    for start in 0..cfg.n_starts.max(1) {
        let mut rng = stream_rng(cfg.seed, start as u64);
        let c0 = initial_centroids(&sorted, k, start, spread, &mut rng);
        let run = run_from(y, c0, m, cfg);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    let run = best.expect("at least one start");
    let order = descending_order(&run.c);
    let u = MembershipMatrix::new(DMatrix::from_row_slice(y.len(), k, &run.u))?;
    Ok(FuzzyResult {
        membership: u.permute_states(&order),
        centroids: order.iter().map(|&j| run.c[j]).collect(),
        objective: run.objective,
        iterations: run.iterations,
        converged: run.converged,
        objective_trace: run.trace,
    })
}
