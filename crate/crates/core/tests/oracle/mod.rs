//! Brute-force reference implementations used as test oracles. They share
//! no code with the library beyond its data types.
#![allow(dead_code)]

use msfuzzy::{MSModelSpec, MembershipMatrix, TransitionMatrix};
use rand::Rng;

/// Stationary distribution by power iteration `v <- v P` from the uniform
/// vector, renormalized each step.
pub fn ergodic_by_powers(p: &TransitionMatrix) -> Vec<f64> {
    let k = p.k();
    let mut v = vec![1.0 / k as f64; k];
    for _ in 0..100_000 {
        let mut next: Vec<f64> = (0..k).map(|j| (0..k).map(|i| v[i] * p.get(i, j)).sum()).collect();
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        let change = next.iter().zip(&v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        v = next;
        if change < 1e-16 {
            break;
        }
    }
    v
}

fn normal_density(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

/// Exact likelihood and smoothed marginals by summing over all `k^T` state
/// paths. With an AR(1) term the first observation is conditioned on and
/// `s_1` is drawn from the ergodic distribution.
pub fn enumerate_paths(y: &[f64], spec: &MSModelSpec) -> (f64, Vec<Vec<f64>>) {
    let k = spec.k();
    let n = y.len();
    let pi = ergodic_by_powers(&spec.transition);
    let ar = spec.ar_coeffs.first().copied();
    let density = |t: usize, cur: usize, prev: usize| -> f64 {
        match ar {
            None => normal_density(y[t], spec.means[cur], spec.sigma),
            Some(_) if t == 0 => 1.0,
            Some(phi) => normal_density(
                y[t],
                spec.means[cur] + phi * (y[t - 1] - spec.means[prev]),
                spec.sigma,
            ),
        }
    };
    let mut total = 0.0;
    let mut marg = vec![vec![0.0; k]; n];
    let mut path = vec![0usize; n];
    loop {
        let mut w = pi[path[0]] * density(0, path[0], 0);
        for t in 1..n {
            w *= spec.transition.get(path[t - 1], path[t]) * density(t, path[t], path[t - 1]);
        }
        total += w;
        for t in 0..n {
            marg[t][path[t]] += w;
        }
        // advance the mixed-radix counter
        let mut pos = 0;
        loop {
            if pos == n {
                for row in &mut marg {
                    row.iter_mut().for_each(|v| *v /= total);
                }
                return (total.ln(), marg);
            }
            path[pos] += 1;
            if path[pos] < k {
                break;
            }
            path[pos] = 0;
            pos += 1;
        }
    }
}

/// Rand index as the share of agreeing pairs.
pub fn rand_by_pairs(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let mut agree = 0usize;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            pairs += 1;
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / pairs as f64
}

pub fn random_transition<R: Rng>(rng: &mut R, k: usize) -> TransitionMatrix {
    let rows = (0..k)
        .map(|_| {
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            let mut row: Vec<f64> = raw.iter().map(|v| v / s).collect();
            // make the row sum exact
            let rest: f64 = row[1..].iter().sum();
            row[0] = 1.0 - rest;
            row
        })
        .collect();
    TransitionMatrix::new(rows).unwrap()
}

pub fn random_spec<R: Rng>(rng: &mut R, k: usize, order: usize) -> MSModelSpec {
    let means = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
    let ar = (0..order).map(|_| rng.random_range(-0.9..0.9)).collect();
    MSModelSpec::new(means, ar, rng.random_range(0.4..2.0), random_transition(rng, k)).unwrap()
}

pub fn random_membership<R: Rng>(rng: &mut R, t: usize, k: usize) -> MembershipMatrix {
    let rows: Vec<Vec<f64>> = (0..t)
        .map(|_| {
            let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>().powi(3)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        })
        .collect();
    MembershipMatrix::from_rows(&rows).unwrap()
}

/// Number of strict local maxima of a sampled curve.
pub fn count_modes(values: &[f64]) -> usize {
    values.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count()
}
