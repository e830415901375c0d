//! Maximum-likelihood estimation of MS and MS-AR(1) models.
//!
//! The likelihood from the Hamilton filter is maximized over an unconstrained
//! parameter vector
//!
//! ```text
//! [mu_1 .. mu_k, atanh(phi), ln(sigma), a_1 .. a_k]
//! ```
//!
//! where `a_i` holds the `k - 1` logits of row `i` of the transition matrix
//! against its diagonal (`p_il = exp(a_il) / (1 + sum exp(a_i.))`), clamped at
//! +-15. Each start is initialized from a fuzzy k-means partition of the data.

use std::path::Path;

use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{MsError, Result};
use crate::filter::{filter_and_smooth, log_likelihood, log_likelihood_terms};
use crate::fuzzy::{fuzzy_kmeans, FuzzyConfig, DEFAULT_FUZZINESS};
use crate::optim::{fd_step, minimize_bfgs, BfgsConfig};
use crate::rng::stream_rng;
use crate::stats::{mean, sd_ml};
use crate::types::{
    canonicalize_labels, hard_assign, MSModelSpec, ProbabilityPaths, TimeSeries, TransitionMatrix,
};

/// Bound on the transition logits.
pub const LOGIT_CLAMP: f64 = 15.0;
/// Bound on `atanh(phi)`, keeping `|phi| < 1` strictly.
const AR_CLAMP: f64 = 8.0;
/// Largest supported number of states.
pub const MAX_STATES: usize = 4;
/// Relative finite-difference step for per-observation scores.
pub const SE_STEP: f64 = 1e-5;
/// Relative step of the coarser Hessian in the Richardson pair (`h`, `h/2`).
/// Smaller steps let rounding noise in the likelihood dominate.
pub const HESSIAN_STEP: f64 = 2e-3;
/// Hessians with a larger condition number are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationConfig {
    pub n_restarts: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Start jitter on the means, as a multiple of the sample standard deviation.
    pub jitter_scale: f64,
    pub seed: u64,
    /// Fuzziness of the k-means partition used for initialization.
    pub fuzziness: f64,
    pub std_errors: bool,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            n_restarts: 20,
            max_iter: 500,
            grad_tol: 1e-6,
            jitter_scale: 0.25,
            seed: 0,
            fuzziness: DEFAULT_FUZZINESS,
            std_errors: false,
        }
    }
}

impl EstimationConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| MsError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| MsError::io(path, e))?;
        Self::from_toml_str(&text)
    }
}

/// Robust standard errors on the natural parameter scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StdErrors {
    pub means: Vec<f64>,
    pub ar_coeffs: Vec<f64>,
    pub sigma: f64,
    /// Standard error of every `p_ij`, `k x k`.
    pub transition: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct MSEstimate {
    /// Canonical labeling: means in descending order.
    pub spec: MSModelSpec,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_params: usize,
    pub paths: ProbabilityPaths,
    pub std_errors: Option<StdErrors>,
    pub converged: bool,
    pub n_restarts_used: usize,
    /// Infinity norm of the transformed-scale gradient at the optimum.
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Number of free parameters: means, AR terms, sigma and `k(k-1)` transition
/// probabilities.
pub fn n_params(k: usize, order: usize) -> usize {
    k + order + 1 + k * (k - 1)
}

/// Per-observation `(AIC, BIC)`.
pub fn information_criteria(loglik: f64, n_params: usize, n_obs: usize) -> (f64, f64) {
    let t = n_obs as f64;
    let np = n_params as f64;
    ((-2.0 * loglik + 2.0 * np) / t, (-2.0 * loglik + np * t.ln()) / t)
}

/// Maps between a model and its unconstrained parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamMap {
    pub k: usize,
    pub order: usize,
}

impl ParamMap {
    pub fn len(self) -> usize {
        n_params(self.k, self.order)
    }

    pub fn is_empty(self) -> bool {
        false
    }

    fn sigma_index(self) -> usize {
        self.k + self.order
    }

    fn transition_rows(self, theta: &[f64]) -> Vec<Vec<f64>> {
        let k = self.k;
        let base = self.sigma_index() + 1;
        (0..k)
            .map(|i| {
                let logits = &theta[base + i * (k - 1)..base + (i + 1) * (k - 1)];
                let mut row = vec![0.0; k];
                let mut it = logits.iter();
                let mut total = 1.0;
                for (l, v) in row.iter_mut().enumerate() {
                    if l == i {
                        *v = 1.0;
                    } else {
                        *v = it.next().unwrap().clamp(-LOGIT_CLAMP, LOGIT_CLAMP).exp();
                        total += *v;
                    }
                }
                row.iter_mut().for_each(|v| *v /= total);
                row
            })
            .collect()
    }

    pub fn to_spec(self, theta: &[f64]) -> Result<MSModelSpec> {
        let k = self.k;
        let means = theta[..k].to_vec();
        let ar = theta[k..k + self.order]
            .iter()
            .map(|a| a.clamp(-AR_CLAMP, AR_CLAMP).tanh())
            .collect();
        let sigma = theta[self.sigma_index()].exp();
        MSModelSpec::new(means, ar, sigma, TransitionMatrix::new(self.transition_rows(theta))?)
    }

    pub fn from_spec(self, spec: &MSModelSpec) -> Vec<f64> {
        let k = self.k;
        let mut theta = spec.means.clone();
        theta.extend(spec.ar_coeffs.iter().map(|p| p.clamp(-0.999_999, 0.999_999).atanh()));
        theta.push(spec.sigma.ln());
        let floor = (-LOGIT_CLAMP).exp();
        for i in 0..k {
            let pii = spec.transition.get(i, i).max(floor);
            for l in (0..k).filter(|&l| l != i) {
                let v = (spec.transition.get(i, l).max(floor) / pii).ln();
                theta.push(v.clamp(-LOGIT_CLAMP, LOGIT_CLAMP));
            }
        }
        theta
    }

    /// Natural parameters: means, AR terms, sigma, then `P` row-major.
    pub fn natural(self, theta: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut out = theta[..k].to_vec();
        out.extend(theta[k..k + self.order].iter().map(|a| a.clamp(-AR_CLAMP, AR_CLAMP).tanh()));
        out.push(theta[self.sigma_index()].exp());
        for row in self.transition_rows(theta) {
            out.extend(row);
        }
        out
    }
}

/// Objective minimized by [`fit_ms`]; infinite where the likelihood is undefined.
pub fn negative_loglik(y: &TimeSeries, map: ParamMap) -> impl Fn(&[f64]) -> f64 + '_ {
    move |theta: &[f64]| match map.to_spec(theta).and_then(|s| log_likelihood(y, &s)) {
        Ok(ll) if ll.is_finite() => -ll,
        _ => f64::INFINITY,
    }
}

/// Starting values from a hard partition of the fuzzy k-means memberships.
fn initial_spec(y: &TimeSeries, k: usize, order: usize, cfg: &EstimationConfig) -> Result<MSModelSpec> {
    let v = y.values();
    let fuzzy = fuzzy_kmeans(v, k, cfg.fuzziness, &FuzzyConfig::with_seed(cfg.seed))?;
    let states = hard_assign(&fuzzy.membership);
    let c = &fuzzy.centroids;
    let resid: Vec<f64> = v.iter().zip(states.states()).map(|(yt, &s)| yt - c[s]).collect();

    let mut phi = Vec::new();
    let mut innov = resid.clone();
    if order == 1 {
        let num: f64 = resid.windows(2).map(|w| w[0] * w[1]).sum();
        let den: f64 = resid.iter().map(|r| r * r).sum();
        let rho = if den > 0.0 { (num / den).clamp(-0.9, 0.9) } else { 0.0 };
        phi.push(rho);
        innov = resid.windows(2).map(|w| w[1] - rho * w[0]).collect();
    }
    let sigma = sd_ml(&innov).max(1e-3 * sd_ml(v)).max(1e-8);

    let mut counts = vec![vec![1.0; k]; k];
    for w in states.states().windows(2) {
        counts[w[0]][w[1]] += 1.0;
    }
    let rows = counts
        .into_iter()
        .map(|r| {
            let s: f64 = r.iter().sum();
            r.into_iter().map(|x| x / s).collect()
        })
        .collect();
    MSModelSpec::new(c.clone(), phi, sigma, TransitionMatrix::new(rows)?)
}

fn closed_form_single_state(y: &TimeSeries) -> Result<MSModelSpec> {
    let v = y.values();
    let sigma = sd_ml(v);
    if sigma <= 0.0 {
        return Err(MsError::DegenerateData { k: 1 });
    }
    MSModelSpec::new(vec![mean(v)], vec![], sigma, TransitionMatrix::new(vec![vec![1.0]])?)
}

pub fn fit_ms(y: &TimeSeries, k: usize, order: usize, cfg: &EstimationConfig) -> Result<MSEstimate> {
    if k == 0 || k > MAX_STATES {
        return Err(MsError::InvalidArgument(format!("k = {k} must be in 1..={MAX_STATES}")));
    }
    if order > 1 {
        return Err(MsError::UnsupportedOrder(order));
    }
    if y.len() < 10 * k {
        return Err(MsError::InsufficientData {
            needed: 10 * k,
            got: y.len(),
        });
    }
    let map = ParamMap { k, order };
    let objective = negative_loglik(y, map);

    let (best_theta, converged, grad_norm, iterations, used) = if k == 1 && order == 0 {
        let spec = closed_form_single_state(y)?;
        (map.from_spec(&spec), true, 0.0, 0, 1)
    } else {
        let init = map.from_spec(&initial_spec(y, k, order, cfg)?);
        let spread = sd_ml(y.values());
        let jitter = Normal::new(0.0, (cfg.jitter_scale * spread).max(f64::MIN_POSITIVE))
            .map_err(|e| MsError::Config(e.to_string()))?;
        let bfgs = BfgsConfig {
            max_iter: cfg.max_iter,
            grad_tol: cfg.grad_tol,
        };
        let n_starts = cfg.n_restarts.max(1);
        let mut best: Option<crate::optim::BfgsResult> = None;
        for start in 0..n_starts {
            let mut theta0 = init.clone();
            if start > 0 {
                let mut rng = stream_rng(cfg.seed, 1000 + start as u64);
                theta0[..k].iter_mut().for_each(|m| *m += jitter.sample(&mut rng));
            }
            let r = minimize_bfgs(&objective, &theta0, bfgs);
            if r.value.is_finite() && best.as_ref().is_none_or(|b| r.value < b.value) {
                best = Some(r);
            }
        }
        let r = best.ok_or(MsError::DegenerateLikelihood { t: 0 })?;
        (r.x, r.converged, r.grad_norm, r.iterations, n_starts)
    };

    let raw = if k == 1 && order == 0 {
        closed_form_single_state(y)?
    } else {
        map.to_spec(&best_theta)?
    };
    let (loglik, paths) = filter_and_smooth(y, &raw)?;
    let (spec, paths) = canonicalize_labels(&raw, &paths);
    let np = n_params(k, order);
    let (aic, bic) = information_criteria(loglik, np, y.len());
    let std_errors = if cfg.std_errors {
        robust_std_errors(y, &spec).ok()
    } else {
        None
    };
    Ok(MSEstimate {
        spec,
        loglik,
        aic,
        bic,
        n_params: np,
        paths,
        std_errors,
        converged,
        n_restarts_used: used,
        grad_norm,
        iterations,
    })
}

fn shifted(theta: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut out = theta.to_vec();
    for &(i, h) in moves {
        out[i] += h;
    }
    out
}

/// Negative Hessian of `f` by central differences with relative step `rel`.
fn neg_hessian<F>(f: &F, theta: &[f64], rel: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let n = theta.len();
    let h: Vec<f64> = theta.iter().map(|&x| fd_step(x, rel)).collect();
    let f0 = f(theta)?;
    let mut info = DMatrix::zeros(n, n);
    for i in 0..n {
        let up = f(&shifted(theta, &[(i, h[i])]))?;
        let down = f(&shifted(theta, &[(i, -h[i])]))?;
        info[(i, i)] = -(up - 2.0 * f0 + down) / (h[i] * h[i]);
        for j in 0..i {
            let pp = f(&shifted(theta, &[(i, h[i]), (j, h[j])]))?;
            let pm = f(&shifted(theta, &[(i, h[i]), (j, -h[j])]))?;
            let mp = f(&shifted(theta, &[(i, -h[i]), (j, h[j])]))?;
            let mm = f(&shifted(theta, &[(i, -h[i]), (j, -h[j])]))?;
            let v = -(pp - pm - mp + mm) / (4.0 * h[i] * h[j]);
            info[(i, j)] = v;
            info[(j, i)] = v;
        }
    }
    Ok(info)
}

/// Sandwich covariance `H^-1 G H^-1` on the transformed scale, mapped to the
/// natural parameters by the delta method. `H` is the Richardson-extrapolated
/// finite-difference Hessian of the log-likelihood and `G` the outer product
/// of per-observation scores.
pub fn robust_std_errors(y: &TimeSeries, spec: &MSModelSpec) -> Result<StdErrors> {
    let k = spec.k();
    let order = spec.order();
    let map = ParamMap { k, order };
    let theta = map.from_spec(spec);
    let n = theta.len();
    let h: Vec<f64> = theta.iter().map(|&x| fd_step(x, SE_STEP)).collect();

    let ll = |th: &[f64]| -> Result<f64> { log_likelihood(y, &map.to_spec(th)?) };
    let terms = |th: &[f64]| -> Result<Vec<f64>> { log_likelihood_terms(y, &map.to_spec(th)?) };

    let info = {
        let coarse = neg_hessian(&ll, &theta, HESSIAN_STEP)?;
        let fine = neg_hessian(&ll, &theta, HESSIAN_STEP / 2.0)?;
        (fine * 4.0 - coarse) / 3.0
    };

    let len = y.len();
    let mut scores = DMatrix::zeros(len, n);
    for i in 0..n {
        let up = terms(&shifted(&theta, &[(i, h[i])]))?;
        let down = terms(&shifted(&theta, &[(i, -h[i])]))?;
        for t in 0..len {
            scores[(t, i)] = (up[t] - down[t]) / (2.0 * h[i]);
        }
    }
    let outer = scores.transpose() * &scores;

    let sv = info.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(MsError::SingularHessian { condition });
    }
    let inv = info
        .try_inverse()
        .ok_or(MsError::SingularHessian { condition })?;
    let cov = &inv * outer * &inv;

    // Jacobian of the natural parameters with respect to theta.
    let nat0 = map.natural(&theta);
    let mut jac = DMatrix::zeros(nat0.len(), n);
    for i in 0..n {
        let step = fd_step(theta[i], 1e-7);
        let up = map.natural(&shifted(&theta, &[(i, step)]));
        let down = map.natural(&shifted(&theta, &[(i, -step)]));
        for r in 0..nat0.len() {
            jac[(r, i)] = (up[r] - down[r]) / (2.0 * step);
        }
    }
    let nat_cov = &jac * cov * jac.transpose();
    let se: Vec<f64> = (0..nat0.len()).map(|r| nat_cov[(r, r)].max(0.0).sqrt()).collect();

    let base = k + order + 1;
    Ok(StdErrors {
        means: se[..k].to_vec(),
        ar_coeffs: se[k..k + order].to_vec(),
        sigma: se[k + order],
        transition: (0..k).map(|i| se[base + i * k..base + (i + 1) * k].to_vec()).collect(),
    })
}
