//! Markov chain utilities, MS / MS-AR simulation, the ergodic mixture density
//! and the catalog of 32 Monte Carlo data generating processes.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{MsError, Result};
use crate::stats::normal_pdf;
use crate::types::{MSModelSpec, StatePath, TimeSeries, TransitionMatrix};

/// Pre-sample observations simulated and discarded for AR models.
pub const BURN_IN: usize = 200;

/// Tolerance on `pi' P = pi'` for the stationary distribution.
const ERGODIC_TOL: f64 = 1e-10;

/// Whether some power `P^n`, `n <= k^2`, is strictly positive (irreducible and
/// aperiodic).
pub fn is_primitive(p: &TransitionMatrix) -> bool {
    let k = p.k();
    let support: Vec<Vec<bool>> = (0..k)
        .map(|i| (0..k).map(|j| p.get(i, j) > 0.0).collect())
        .collect();
    let mut power = support.clone();
    for _ in 0..k * k {
        if power.iter().all(|r| r.iter().all(|&b| b)) {
            return true;
        }
        power = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| (0..k).any(|l| power[i][l] && support[l][j]))
                    .collect()
            })
            .collect();
    }
    false
}

/// Stationary distribution `pi` with `pi' P = pi'`, `sum(pi) = 1`.
pub fn ergodic_probabilities(p: &TransitionMatrix) -> Result<Vec<f64>> {
    let k = p.k();
    if !is_primitive(p) {
        return Err(MsError::NonErgodicChain);
    }
    // (P' - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    let mut a = p.as_matrix().transpose() - DMatrix::identity(k, k);
    for j in 0..k {
        a[(k - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(k);
    b[k - 1] = 1.0;
    let pi = a.lu().solve(&b).ok_or(MsError::NonErgodicChain)?;
    let pi: Vec<f64> = pi.iter().copied().collect();
    if pi.iter().any(|&v| !(v > 0.0)) {
        return Err(MsError::NonErgodicChain);
    }
    let residual = (0..k)
        .map(|j| ((0..k).map(|i| pi[i] * p.get(i, j)).sum::<f64>() - pi[j]).abs())
        .fold(0.0, f64::max);
    if residual > ERGODIC_TOL {
        return Err(MsError::NonErgodicChain);
    }
    Ok(pi)
}

/// Expected sojourn `1 / (1 - p_ii)` in a state with persistence `p_ii`.
pub fn mean_duration(p_ii: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_ii) {
        return Err(MsError::InvalidArgument(format!("{p_ii} is not a probability")));
    }
    if p_ii == 1.0 {
        return Err(MsError::AbsorbingState);
    }
    Ok(1.0 / (1.0 - p_ii))
}

fn draw_categorical<R: Rng + ?Sized>(rng: &mut R, probs: impl Iterator<Item = f64>) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (j, p) in probs.enumerate() {
        if p > 0.0 {
            last_positive = j;
        }
        cum += p;
        if u < cum {
            return j;
        }
    }
    last_positive
}

/// Markov chain of length `len` started from the ergodic distribution.
pub fn simulate_chain<R: Rng + ?Sized>(
    p: &TransitionMatrix,
    len: usize,
    rng: &mut R,
) -> Result<StatePath> {
    if len == 0 {
        return Err(MsError::InvalidArgument("chain length must be at least 1".into()));
    }
    let pi = ergodic_probabilities(p)?;
    let k = p.k();
    let mut states = Vec::with_capacity(len);
    let mut s = draw_categorical(rng, pi.iter().copied());
    states.push(s);
    for _ in 1..len {
        s = draw_categorical(rng, (0..k).map(|j| p.get(s, j)));
        states.push(s);
    }
    StatePath::new(states, k)
}

/// Simulates `y_t = mu_{s_t} + sum_i phi_i (y_{t-i} - mu_{s_{t-i}}) + e_t`,
/// `e_t ~ N(0, sigma^2)`. AR models discard [`BURN_IN`] leading observations.
pub fn simulate_ms<R: Rng + ?Sized>(
    spec: &MSModelSpec,
    len: usize,
    rng: &mut R,
) -> Result<(TimeSeries, StatePath)> {
    spec.validate()?;
    if len == 0 {
        return Err(MsError::InvalidArgument("series length must be at least 1".into()));
    }
    let p = spec.order();
    let burn = if p > 0 { BURN_IN } else { 0 };
    let total = len + burn;
    let path = simulate_chain(&spec.transition, total, rng)?;
    let noise = Normal::new(0.0, spec.sigma)
        .map_err(|e| MsError::InvalidSpec(format!("innovation scale: {e}")))?;

    // deviations y_t - mu_{s_t}; pre-sample deviations are zero
    let mut dev = vec![0.0; total];
    let mut y = Vec::with_capacity(len);
    for t in 0..total {
        let ar: f64 = spec
            .ar_coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| t > *i)
            .map(|(i, phi)| phi * dev[t - i - 1])
            .sum();
        dev[t] = ar + noise.sample(rng);
        if t >= burn {
            y.push(spec.means[path.states()[t]] + dev[t]);
        }
    }
    let states = path.slice(burn, total);
    Ok((TimeSeries::new(y)?, states))
}

/// One component of the ergodic mixture: weight, mean, standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

/// Components of the unconditional mixture. For `p = 0` one component per
/// state weighted by `pi_j`; for `p = 1` one per state pair `(i, j)` with
/// weight `pi_i p_ij` and mean `(mu_j - phi mu_i) / (1 - phi)`.
pub fn ergodic_mixture_components(spec: &MSModelSpec) -> Result<Vec<MixtureComponent>> {
    let pi = ergodic_probabilities(&spec.transition)?;
    let k = spec.k();
    match spec.order() {
        0 => Ok((0..k)
            .map(|j| MixtureComponent {
                weight: pi[j],
                mean: spec.means[j],
                sd: spec.sigma,
            })
            .collect()),
        1 => {
            let phi = spec.ar_coeffs[0];
            let mut out = Vec::with_capacity(k * k);
            for i in 0..k {
                for j in 0..k {
                    out.push(MixtureComponent {
                        weight: pi[i] * spec.transition.get(i, j),
                        mean: (spec.means[j] - phi * spec.means[i]) / (1.0 - phi),
                        sd: spec.sigma,
                    });
                }
            }
            Ok(out)
        }
        p => Err(MsError::UnsupportedOrder(p)),
    }
}

pub fn ergodic_mixture_density(spec: &MSModelSpec, grid: &[f64]) -> Result<Vec<f64>> {
    let comps = ergodic_mixture_components(spec)?;
    Ok(grid
        .iter()
        .map(|&x| comps.iter().map(|c| c.weight * normal_pdf(x, c.mean, c.sd)).sum())
        .collect())
}

/// Range `[min mean - width sd, max mean + width sd]` over the mixture components.
pub fn mixture_support(spec: &MSModelSpec, width: f64) -> Result<(f64, f64)> {
    let comps = ergodic_mixture_components(spec)?;
    let lo = comps.iter().map(|c| c.mean - width * c.sd).fold(f64::INFINITY, f64::min);
    let hi = comps.iter().map(|c| c.mean + width * c.sd).fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgpCatalogEntry {
    pub label: String,
    pub spec: MSModelSpec,
}

impl DgpCatalogEntry {
    pub fn k(&self) -> usize {
        self.spec.k()
    }

    pub fn order(&self) -> usize {
        self.spec.order()
    }
}

/// AR(1) coefficient shared by every autoregressive catalog entry.
pub const CATALOG_PHI: f64 = 0.7;

pub fn catalog_transition(k: usize) -> TransitionMatrix {
    let rows = match k {
        2 => vec![vec![0.9, 0.1], vec![0.2, 0.8]],
        3 => vec![
            vec![0.9, 0.07, 0.03],
            vec![0.15, 0.8, 0.05],
            vec![0.1, 0.2, 0.7],
        ],
        _ => unreachable!("catalog only has 2- and 3-state chains"),
    };
    TransitionMatrix::new(rows).expect("catalog transition matrices are stochastic")
}

/// The 32 Monte Carlo DGPs: MS(2), MS(2)-AR(1), MS(3), MS(3)-AR(1), eight each.
/// Entries 1-4 use sigma = 0.5 and entries 5-8 sigma = 0.25; the gap between
/// consecutive means runs 1, 2, 3, 4 within each half.
pub fn dgp_catalog() -> Vec<DgpCatalogEntry> {
    let mut out = Vec::with_capacity(32);
    for (k, ar) in [(2usize, false), (2, true), (3, false), (3, true)] {
        for n in 1..=8usize {
            let gap = ((n - 1) % 4 + 1) as f64;
            let sigma = if n <= 4 { 0.5 } else { 0.25 };
            let means: Vec<f64> = (0..k).map(|j| j as f64 * gap).collect();
            let ar_coeffs = if ar { vec![CATALOG_PHI] } else { vec![] };
            let label = format!("MS{k}{}--{n}", if ar { "AR" } else { "" });
            let spec = MSModelSpec::new(means, ar_coeffs, sigma, catalog_transition(k))
                .expect("catalog specs are valid");
            out.push(DgpCatalogEntry { label, spec });
        }
    }
    out
}

fn normalize_label(label: &str) -> String {
    label.trim().to_ascii_uppercase().replace("--", "-")
}

/// Looks up a catalog entry; `MS2-3` is accepted for `MS2--3`.
pub fn find_dgp(label: &str) -> Result<(usize, DgpCatalogEntry)> {
    let wanted = normalize_label(label);
    dgp_catalog()
        .into_iter()
        .enumerate()
        .find(|(_, e)| normalize_label(&e.label) == wanted)
        .ok_or_else(|| MsError::UnknownLabel(label.to_string()))
}

#[derive(Serialize)]
struct CatalogRecord<'a> {
    label: &'a str,
    k: usize,
    ar_order: usize,
    means: &'a [f64],
    ar_coeffs: &'a [f64],
    sigma: f64,
    transition: Vec<Vec<f64>>,
    ergodic: Vec<f64>,
}

/// The catalog as a JSON array, one record per DGP.
pub fn catalog_json() -> Result<String> {
    let catalog = dgp_catalog();
    let records = catalog
        .iter()
        .map(|e| {
            Ok(CatalogRecord {
                label: &e.label,
                k: e.k(),
                ar_order: e.order(),
                means: &e.spec.means,
                ar_coeffs: &e.spec.ar_coeffs,
                sigma: e.spec.sigma,
                transition: e.spec.transition.rows(),
                ergodic: ergodic_probabilities(&e.spec.transition)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(serde_json::to_string_pretty(&records)?)
}
