//! BFGS minimization with central-difference gradients and an Armijo
//! backtracking line search. Every accepted step strictly lowers the
//! objective.

/// Relative step for central differences: `h_i = REL_STEP * max(1, |x_i|)`.
pub const REL_STEP: f64 = 1e-5;

/// Gradient norm below which a stalled search still counts as converged.
pub const STALL_GRAD_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy)]
pub struct BfgsConfig {
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        BfgsConfig {
            max_iter: 500,
            grad_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at every accepted iterate, starting with `x0`.
    pub trace: Vec<f64>,
}

#[inline]
pub fn fd_step(x: f64, rel: f64) -> f64 {
    rel * x.abs().max(1.0)
}

/// Central-difference gradient with relative step `rel`.
pub fn numerical_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], rel: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = fd_step(x[i], rel);
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

/// Minimizes `f`, which should return `f64::INFINITY` outside its domain.
pub fn minimize_bfgs<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], cfg: BfgsConfig) -> BfgsResult {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut trace = vec![fx];
    if n == 0 || !fx.is_finite() {
        return BfgsResult {
            x,
            value: fx,
            grad_norm: if n == 0 { 0.0 } else { f64::INFINITY },
            iterations: 0,
            converged: n == 0,
            trace,
        };
    }
    let mut g = numerical_gradient(&f, &x, REL_STEP);
    let mut hinv = identity(n);
    let mut fresh = true;
    let mut iterations = 0;
    let mut stalled = false;

    while iterations < cfg.max_iter {
        if inf_norm(&g) < cfg.grad_tol {
            break;
        }
        iterations += 1;
        let mut d: Vec<f64> = (0..n).map(|i| -dot(&hinv[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            hinv = identity(n);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }

        // first steepest-descent step is scaled to move at most one unit
        let mut alpha = if fresh { 1.0 / inf_norm(&d).max(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            let ft = f(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * alpha * slope && ft < fx {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }

        let Some((x_new, f_new)) = accepted else {
            if fresh {
                stalled = true;
                break;
            }
            hinv = identity(n);
            fresh = true;
            continue;
        };

        let g_new = numerical_gradient(&f, &x_new, REL_STEP);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&yv, &yv).sqrt() {
            if fresh {
                // rescale the identity before the first update
                let scale = sy / dot(&yv, &yv);
                hinv.iter_mut().for_each(|h| *h *= scale);
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| dot(&hinv[i * n..(i + 1) * n], &yv)).collect();
            let yhy = dot(&yv, &hy);
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
            fresh = false;
        }

        let small_change = (fx - f_new).abs() <= 1e-14 * (1.0 + fx.abs());
        x = x_new;
        fx = f_new;
        g = g_new;
        trace.push(fx);
        if small_change && inf_norm(&g) < STALL_GRAD_TOL {
            stalled = true;
            break;
        }
    }

    let grad_norm = inf_norm(&g);
    BfgsResult {
        x,
        value: fx,
        grad_norm,
        iterations,
        converged: grad_norm < cfg.grad_tol || (stalled && grad_norm < STALL_GRAD_TOL),
        trace,
    }
}
