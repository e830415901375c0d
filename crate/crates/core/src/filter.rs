//! Hamilton filter, Kim smoother and the exact MS / MS-AR(1) likelihood.
//!
//! For an AR(1) model the chain is expanded to the `k^2` pairs
//! `(s_t, s_{t-1})`, stored at index `s_t * k + s_{t-1}`; the pair chain moves
//! `(j, i) -> (l, j)` with probability `p_jl`. The first observation is
//! conditioned on: its density is taken as 1 and `(s_1, s_0)` starts from
//! `pi_i p_ij`. Without AR terms the augmented chain is the state chain itself.

use nalgebra::DMatrix;

use crate::error::{MsError, Result};
use crate::markov::ergodic_probabilities;
use crate::stats::ln_normal_pdf;
use crate::types::{argmax_rows, MSModelSpec, ProbabilityPaths, StatePath, TimeSeries, TransitionMatrix};

/// Floor applied to predicted probabilities before dividing in the smoother.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct FilterOutput {
    /// `Pr(s_t = j | I_{t-1})`, `T x k`.
    pub predicted: DMatrix<f64>,
    /// `Pr(s_t = j | I_t)`, `T x k`.
    pub filtered: DMatrix<f64>,
    pub loglik: f64,
    /// Per-observation contributions `ln f(y_t | I_{t-1})`.
    pub loglik_terms: Vec<f64>,
    /// `f(y_t | augmented state, I_{t-1})`, `T x k*`.
    pub cond_densities: DMatrix<f64>,
    aug_predicted: DMatrix<f64>,
    aug_filtered: DMatrix<f64>,
    k: usize,
    order: usize,
}

impl FilterOutput {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_obs(&self) -> usize {
        self.predicted.nrows()
    }
}

#[derive(Debug, Clone, Copy)]
struct Augmented {
    k: usize,
    order: usize,
}

impl Augmented {
    fn size(self) -> usize {
        if self.order == 0 {
            self.k
        } else {
            self.k * self.k
        }
    }

    #[inline]
    fn current(self, a: usize) -> usize {
        if self.order == 0 {
            a
        } else {
            a / self.k
        }
    }

    fn initial(self, p: &TransitionMatrix, pi: &[f64]) -> Vec<f64> {
        if self.order == 0 {
            return pi.to_vec();
        }
        let k = self.k;
        let mut out = vec![0.0; k * k];
        for j in 0..k {
            for i in 0..k {
                out[j * k + i] = pi[i] * p.get(i, j);
            }
        }
        out
    }

    /// One-step prediction from filtered augmented probabilities.
    fn predict(self, p: &TransitionMatrix, filt: &[f64], out: &mut [f64]) {
        let k = self.k;
        if self.order == 0 {
            for (l, o) in out.iter_mut().enumerate() {
                *o = (0..k).map(|j| filt[j] * p.get(j, l)).sum();
            }
        } else {
            for j in 0..k {
                let marg: f64 = filt[j * k..(j + 1) * k].iter().sum();
                for l in 0..k {
                    out[l * k + j] = p.get(j, l) * marg;
                }
            }
        }
    }

    /// `(P_aug r)(a)`: expected ratio one step ahead from augmented state `a`.
    fn backward(self, p: &TransitionMatrix, ratio: &[f64], out: &mut [f64]) {
        let k = self.k;
        if self.order == 0 {
            for (j, o) in out.iter_mut().enumerate() {
                *o = (0..k).map(|l| p.get(j, l) * ratio[l]).sum();
            }
        } else {
            for j in 0..k {
                let v: f64 = (0..k).map(|l| p.get(j, l) * ratio[l * k + j]).sum();
                out[j * k..(j + 1) * k].iter_mut().for_each(|o| *o = v);
            }
        }
    }

    /// Log conditional densities of `y_t` for every augmented state.
    fn ln_densities(self, spec: &MSModelSpec, y: &[f64], t: usize, out: &mut [f64]) {
        let k = self.k;
        if self.order == 0 {
            for j in 0..k {
                out[j] = ln_normal_pdf(y[t], spec.means[j], spec.sigma);
            }
        } else if t == 0 {
            out.iter_mut().for_each(|o| *o = 0.0);
        } else {
            let phi = spec.ar_coeffs[0];
            for j in 0..k {
                for i in 0..k {
                    let mean = spec.means[j] + phi * (y[t - 1] - spec.means[i]);
                    out[j * k + i] = ln_normal_pdf(y[t], mean, spec.sigma);
                }
            }
        }
    }
}

fn check_inputs(y: &TimeSeries, spec: &MSModelSpec) -> Result<Augmented> {
    spec.validate()?;
    let order = spec.order();
    if order > 1 {
        return Err(MsError::UnsupportedOrder(order));
    }
    if y.len() < order + 1 {
        return Err(MsError::InsufficientData {
            needed: order + 1,
            got: y.len(),
        });
    }
    Ok(Augmented { k: spec.k(), order })
}

/// Forward recursion; `step` sees `(t, predicted, ln densities - shift, shift,
/// filtered, ln f(y_t | I_{t-1}))` for every `t`.
fn forward<F>(y: &TimeSeries, spec: &MSModelSpec, mut step: F) -> Result<f64>
where
    F: FnMut(usize, &[f64], &[f64], f64, &[f64], f64),
{
    let aug = check_inputs(y, spec)?;
    let p = &spec.transition;
    let pi = ergodic_probabilities(p)?;
    let n = aug.size();
    let values = y.values();

    let mut pred = aug.initial(p, &pi);
    let mut filt = vec![0.0; n];
    let mut ln_eta = vec![0.0; n];
    let mut loglik = 0.0;
    for t in 0..values.len() {
        aug.ln_densities(spec, values, t, &mut ln_eta);
        let shift = ln_eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut c = 0.0;
        for a in 0..n {
            ln_eta[a] -= shift;
            filt[a] = pred[a] * ln_eta[a].exp();
            c += filt[a];
        }
        if !(c > 0.0) || !c.is_finite() || !shift.is_finite() {
            return Err(MsError::DegenerateLikelihood { t: t + 1 });
        }
        filt.iter_mut().for_each(|f| *f /= c);
        let term = shift + c.ln();
        loglik += term;
        step(t, &pred, &ln_eta, shift, &filt, term);
        aug.predict(p, &filt, &mut pred);
    }
    Ok(loglik)
}

/// Log-likelihood only, without storing any paths.
pub fn log_likelihood(y: &TimeSeries, spec: &MSModelSpec) -> Result<f64> {
    forward(y, spec, |_, _, _, _, _, _| {})
}

/// Per-observation log-likelihood contributions.
pub fn log_likelihood_terms(y: &TimeSeries, spec: &MSModelSpec) -> Result<Vec<f64>> {
    let mut terms = Vec::with_capacity(y.len());
    forward(y, spec, |_, _, _, _, _, term| terms.push(term))?;
    Ok(terms)
}

fn marginals(aug: Augmented, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), aug.k);
    for t in 0..m.nrows() {
        for a in 0..m.ncols() {
            out[(t, aug.current(a))] += m[(t, a)];
        }
    }
    out
}

pub fn hamilton_filter(y: &TimeSeries, spec: &MSModelSpec) -> Result<FilterOutput> {
    let aug = check_inputs(y, spec)?;
    let n = aug.size();
    let len = y.len();
    let mut aug_predicted = DMatrix::zeros(len, n);
    let mut aug_filtered = DMatrix::zeros(len, n);
    let mut cond_densities = DMatrix::zeros(len, n);
    let mut loglik_terms = Vec::with_capacity(len);
    let loglik = forward(y, spec, |t, pred, ln_eta, shift, filt, term| {
        for a in 0..n {
            aug_predicted[(t, a)] = pred[a];
            aug_filtered[(t, a)] = filt[a];
            cond_densities[(t, a)] = (ln_eta[a] + shift).exp();
        }
        loglik_terms.push(term);
    })?;
    Ok(FilterOutput {
        predicted: marginals(aug, &aug_predicted),
        filtered: marginals(aug, &aug_filtered),
        loglik,
        loglik_terms,
        cond_densities,
        aug_predicted,
        aug_filtered,
        k: aug.k,
        order: aug.order,
    })
}

/// Backward pass `xi_{t|T} = xi_{t|t} . (P (xi_{t+1|T} / xi_{t+1|t}))`.
pub fn kim_smoother(out: &FilterOutput, p: &TransitionMatrix) -> Result<ProbabilityPaths> {
    if p.k() != out.k {
        return Err(MsError::InvalidArgument(format!(
            "{}-state transition matrix for a {}-state filter",
            p.k(),
            out.k
        )));
    }
    let aug = Augmented {
        k: out.k,
        order: out.order,
    };
    let n = aug.size();
    let len = out.n_obs();
    let mut smoothed = DMatrix::zeros(len, n);
    for a in 0..n {
        smoothed[(len - 1, a)] = out.aug_filtered[(len - 1, a)];
    }
    let mut ratio = vec![0.0; n];
    let mut ahead = vec![0.0; n];
    for t in (0..len - 1).rev() {
        for b in 0..n {
            let pred = out.aug_predicted[(t + 1, b)];
            let sm = smoothed[(t + 1, b)];
            if pred <= 0.0 && sm > PROBABILITY_FLOOR {
                return Err(MsError::DivisionByZeroProbability { t: t + 2 });
            }
            ratio[b] = sm / pred.max(PROBABILITY_FLOOR);
        }
        aug.backward(p, &ratio, &mut ahead);
        let mut total = 0.0;
        for a in 0..n {
            let v = out.aug_filtered[(t, a)] * ahead[a];
            smoothed[(t, a)] = v;
            total += v;
        }
        for a in 0..n {
            smoothed[(t, a)] /= total;
        }
    }
    ProbabilityPaths::new(
        out.predicted.clone(),
        out.filtered.clone(),
        marginals(aug, &smoothed),
    )
}

/// Filter and smooth in one call.
pub fn filter_and_smooth(y: &TimeSeries, spec: &MSModelSpec) -> Result<(f64, ProbabilityPaths)> {
    let out = hamilton_filter(y, spec)?;
    let paths = kim_smoother(&out, &spec.transition)?;
    Ok((out.loglik, paths))
}

/// Most probable state at each `t` under the smoothed probabilities.
pub fn infer_states(y: &TimeSeries, spec: &MSModelSpec) -> Result<StatePath> {
    let (_, paths) = filter_and_smooth(y, spec)?;
    StatePath::new(argmax_rows(&paths.smoothed), spec.k())
}
