//! Shared domain types and their invariants.
//!
//! States are stored 0-based (`0..k`); exports and the CLI print them 1-based.
//! All types are immutable after construction.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{MsError, Result};

/// Row-sum tolerance for transition matrices supplied by the caller.
pub const STOCHASTIC_TOL: f64 = 1e-10;
/// Row-sum tolerance for computed probability or membership rows.
pub const PROBABILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_labels(values, None)
    }

    pub fn with_labels(values: Vec<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        if values.is_empty() {
            return Err(MsError::EmptySeries);
        }
        if let Some(t) = values.iter().position(|v| !v.is_finite()) {
            return Err(MsError::InvalidSeries(format!(
                "non-finite value at position {}",
                t + 1
            )));
        }
        if let Some(l) = &labels {
            if l.len() != values.len() {
                return Err(MsError::InvalidSeries(format!(
                    "{} labels for {} values",
                    l.len(),
                    values.len()
                )));
            }
        }
        Ok(TimeSeries { values, labels })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Label for observation `t`, falling back to its 1-based position.
    pub fn label(&self, t: usize) -> String {
        match &self.labels {
            Some(l) => l[t].clone(),
            None => (t + 1).to_string(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance (0 for a single observation).
    pub fn variance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean();
        self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    }

    /// Affine map `a * y + b`, keeping labels.
    pub fn affine(&self, a: f64, b: f64) -> Result<TimeSeries> {
        TimeSeries::with_labels(
            self.values.iter().map(|v| a * v + b).collect(),
            self.labels.clone(),
        )
    }

    /// Sub-series `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Result<TimeSeries> {
        TimeSeries::with_labels(
            self.values[start..end].to_vec(),
            self.labels.as_ref().map(|l| l[start..end].to_vec()),
        )
    }
}

/// Row-stochastic `k x k` matrix with `p_ij = Pr(s_t = j | s_{t-1} = i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    probs: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(MsError::InvalidTransition("empty matrix".into()));
        }
        if rows.iter().any(|r| r.len() != k) {
            return Err(MsError::InvalidTransition("matrix is not square".into()));
        }
        Self::from_matrix(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
    }

    pub fn from_matrix(probs: DMatrix<f64>) -> Result<Self> {
        let k = probs.nrows();
        if k == 0 || probs.ncols() != k {
            return Err(MsError::InvalidTransition("matrix must be square and non-empty".into()));
        }
        for i in 0..k {
            let mut sum = 0.0;
            for j in 0..k {
                let p = probs[(i, j)];
                if !(0.0..=1.0).contains(&p) {
                    return Err(MsError::InvalidTransition(format!(
                        "entry ({}, {}) = {p} outside [0, 1]",
                        i + 1,
                        j + 1
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(MsError::InvalidTransition(format!(
                    "row {} sums to {sum}",
                    i + 1
                )));
            }
        }
        Ok(TransitionMatrix { probs })
    }

    /// Two-state matrix from its diagonal.
    pub fn two_state(p11: f64, p22: f64) -> Result<Self> {
        Self::new(vec![vec![p11, 1.0 - p11], vec![1.0 - p22, p22]])
    }

    /// Uniform rows, `p_ij = 1/k`.
    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(vec![vec![1.0 / k as f64; k]; k])
    }

    pub fn k(&self) -> usize {
        self.probs.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.k())
            .map(|i| (0..self.k()).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Relabel states: new state `a` is old state `order[a]`.
    pub fn permuted(&self, order: &[usize]) -> TransitionMatrix {
        let k = self.k();
        TransitionMatrix {
            probs: DMatrix::from_fn(k, k, |a, b| self.probs[(order[a], order[b])]),
        }
    }
}

impl Serialize for TransitionMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for TransitionMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        TransitionMatrix::new(rows).map_err(serde::de::Error::custom)
    }
}

/// Parameters of an MS-AR(p) model with state-dependent means and a common
/// innovation scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MSModelSpec {
    pub means: Vec<f64>,
    pub ar_coeffs: Vec<f64>,
    pub sigma: f64,
    pub transition: TransitionMatrix,
}

impl MSModelSpec {
    pub fn new(
        means: Vec<f64>,
        ar_coeffs: Vec<f64>,
        sigma: f64,
        transition: TransitionMatrix,
    ) -> Result<Self> {
        let spec = MSModelSpec {
            means,
            ar_coeffs,
            sigma,
            transition,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.means.len() != self.transition.k() {
            return Err(MsError::InvalidSpec(format!(
                "{} means for a {}-state transition matrix",
                self.means.len(),
                self.transition.k()
            )));
        }
        if self.means.iter().chain(&self.ar_coeffs).any(|v| !v.is_finite()) {
            return Err(MsError::InvalidSpec("non-finite parameter".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(MsError::InvalidSpec(format!("sigma = {} must be positive", self.sigma)));
        }
        if !ar_is_stationary(&self.ar_coeffs) {
            return Err(MsError::InvalidSpec(
                "AR polynomial has a root on or inside the unit circle".into(),
            ));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn order(&self) -> usize {
        self.ar_coeffs.len()
    }

    /// Relabel states: new state `a` is old state `order[a]`.
    pub fn permuted(&self, order: &[usize]) -> MSModelSpec {
        MSModelSpec {
            means: order.iter().map(|&i| self.means[i]).collect(),
            ar_coeffs: self.ar_coeffs.clone(),
            sigma: self.sigma,
            transition: self.transition.permuted(order),
        }
    }
}

/// True when all roots of `1 - phi_1 z - ... - phi_p z^p` lie outside the unit
/// circle, i.e. the companion matrix has spectral radius below one.
pub fn ar_is_stationary(phi: &[f64]) -> bool {
    match phi.len() {
        0 => true,
        1 => phi[0].abs() < 1.0,
        p => {
            let companion = DMatrix::from_fn(p, p, |i, j| {
                if i == 0 {
                    phi[j]
                } else if i == j + 1 {
                    1.0
                } else {
                    0.0
                }
            });
            companion
                .complex_eigenvalues()
                .iter()
                .all(|z: &Complex<f64>| z.norm() < 1.0)
        }
    }
}

fn check_probability_rows(m: &DMatrix<f64>, what: &str) -> Result<()> {
    for t in 0..m.nrows() {
        let mut sum = 0.0;
        for &u in m.row(t).iter() {
            if !(-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&u) || u.is_nan() {
                return Err(MsError::InvalidMembership(format!(
                    "{what}: entry {u} in row {} outside [0, 1]",
                    t + 1
                )));
            }
            sum += u;
        }
        if (sum - 1.0).abs() > PROBABILITY_TOL {
            return Err(MsError::InvalidMembership(format!(
                "{what}: row {} sums to {sum}",
                t + 1
            )));
        }
    }
    Ok(())
}

/// `T x k` soft assignment weights (fuzzy memberships or state probabilities).
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix {
    weights: DMatrix<f64>,
}

impl MembershipMatrix {
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(MsError::InvalidMembership("empty matrix".into()));
        }
        check_probability_rows(&weights, "membership")?;
        Ok(MembershipMatrix { weights })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(MsError::InvalidMembership("ragged rows".into()));
        }
        Self::new(DMatrix::from_fn(rows.len(), k, |t, j| rows[t][j]))
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn n_obs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn k(&self) -> usize {
        self.weights.ncols()
    }

    #[inline]
    pub fn get(&self, t: usize, j: usize) -> f64 {
        self.weights[(t, j)]
    }

    pub fn row(&self, t: usize) -> Vec<f64> {
        self.weights.row(t).iter().copied().collect()
    }
}

/// Hidden state sequence, 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StatePath {
    states: Vec<usize>,
    k: usize,
}

impl StatePath {
    pub fn new(states: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&s) = states.iter().find(|&&s| s >= k) {
            return Err(MsError::InvalidArgument(format!("state {s} out of range for k = {k}")));
        }
        Ok(StatePath { states, k })
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn slice(&self, start: usize, end: usize) -> StatePath {
        StatePath {
            states: self.states[start..end].to_vec(),
            k: self.k,
        }
    }

    /// States as `1..=k`, the convention used in exports.
    pub fn one_based(&self) -> Vec<usize> {
        self.states.iter().map(|s| s + 1).collect()
    }
}

/// Predicted `Pr(s_t | I_{t-1})`, filtered `Pr(s_t | I_t)` and smoothed
/// `Pr(s_t | I_T)` state probabilities, each `T x k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityPaths {
    pub predicted: DMatrix<f64>,
    pub filtered: DMatrix<f64>,
    pub smoothed: DMatrix<f64>,
}

impl ProbabilityPaths {
    pub fn new(predicted: DMatrix<f64>, filtered: DMatrix<f64>, smoothed: DMatrix<f64>) -> Result<Self> {
        let shape = predicted.shape();
        if filtered.shape() != shape || smoothed.shape() != shape {
            return Err(MsError::InvalidMembership("probability paths differ in shape".into()));
        }
        check_probability_rows(&predicted, "predicted")?;
        check_probability_rows(&filtered, "filtered")?;
        check_probability_rows(&smoothed, "smoothed")?;
        Ok(ProbabilityPaths {
            predicted,
            filtered,
            smoothed,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.smoothed.nrows()
    }

    pub fn k(&self) -> usize {
        self.smoothed.ncols()
    }

    pub fn smoothed_membership(&self) -> MembershipMatrix {
        MembershipMatrix {
            weights: self.smoothed.clone(),
        }
    }

    pub fn filtered_membership(&self) -> MembershipMatrix {
        MembershipMatrix {
            weights: self.filtered.clone(),
        }
    }
}

/// Consistent relabeling of states. `order[new] = old`.
pub trait PermuteStates: Sized {
    fn permute_states(&self, order: &[usize]) -> Self;
}

fn permute_columns(m: &DMatrix<f64>, order: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |t, a| m[(t, order[a])])
}

impl PermuteStates for MembershipMatrix {
    fn permute_states(&self, order: &[usize]) -> Self {
        MembershipMatrix {
            weights: permute_columns(&self.weights, order),
        }
    }
}

impl PermuteStates for ProbabilityPaths {
    fn permute_states(&self, order: &[usize]) -> Self {
        ProbabilityPaths {
            predicted: permute_columns(&self.predicted, order),
            filtered: permute_columns(&self.filtered, order),
            smoothed: permute_columns(&self.smoothed, order),
        }
    }
}

impl PermuteStates for StatePath {
    fn permute_states(&self, order: &[usize]) -> Self {
        let mut new_of_old = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            new_of_old[old] = new;
        }
        StatePath {
            states: self.states.iter().map(|&s| new_of_old[s]).collect(),
            k: self.k,
        }
    }
}

impl PermuteStates for MSModelSpec {
    fn permute_states(&self, order: &[usize]) -> Self {
        self.permuted(order)
    }
}

/// State order sorting values descending; ties keep their original order.
pub fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order
}

/// Relabel states so that `means` are in descending order, permuting the
/// transition matrix and the companion probabilities consistently.
pub fn canonicalize_labels<P: PermuteStates>(spec: &MSModelSpec, paths: &P) -> (MSModelSpec, P) {
    let order = descending_order(&spec.means);
    (spec.permuted(&order), paths.permute_states(&order))
}

/// Mode of each row; ties go to the lowest state index.
pub fn argmax_rows(m: &DMatrix<f64>) -> Vec<usize> {
    (0..m.nrows())
        .map(|t| {
            let mut best = 0;
            for j in 1..m.ncols() {
                if m[(t, j)] > m[(t, best)] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

pub fn hard_assign(u: &MembershipMatrix) -> StatePath {
    StatePath {
        states: argmax_rows(&u.weights),
        k: u.k(),
    }
}
