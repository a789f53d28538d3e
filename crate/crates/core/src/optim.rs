//! Unconstrained maximization with finite-difference gradients.
//!
//! Quasi-Newton (BFGS) descent directions with an Armijo backtracking line
//! search. Constrained problems are mapped to an unconstrained space by the
//! caller; see [`Transform`].

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimOptions {
    pub max_iter: usize,
    /// Convergence threshold on the Euclidean gradient norm.
    pub grad_tol: f64,
    /// Relative central-difference step.
    pub fd_step: f64,
    pub armijo: f64,
    pub initial_step: f64,
    pub contraction: f64,
    pub max_backtracks: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-6,
            fd_step: 1e-6,
            armijo: 1e-4,
            initial_step: 1.0,
            contraction: 0.5,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub initial_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() { f64::NEG_INFINITY } else { v }
}

/// Central-difference gradient with step `rel * max(1, |x_i|)`.
pub fn fd_gradient<F: FnMut(&[f64]) -> f64>(f: &mut F, x: &[f64], rel: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let h = rel * x[i].abs().max(1.0);
        probe[i] = x[i] + h;
        let up = sanitize(f(&probe));
        probe[i] = x[i] - h;
        let down = sanitize(f(&probe));
        probe[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    g
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

/// Maximize `f` starting from `x0`.
///
/// Non-finite objective values are treated as `-inf` and rejected by the
/// line search, so `f` may signal infeasible points that way.
pub fn maximize<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &OptimOptions) -> OptimOutcome {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = sanitize(f(&x));
    let initial_value = fx;
    if !fx.is_finite() || n == 0 {
        return OptimOutcome { x, value: fx, initial_value, iterations: 0, converged: n == 0, gradient_norm: 0.0 };
    }
    // work with the ascent gradient g = grad f and inverse-Hessian of -f
    let mut g = fd_gradient(&mut f, &x, opts.fd_step);
    let mut h = identity(n);
    let mut fresh = true;
    let mut iterations = 0;
    let mut converged = norm(&g) < opts.grad_tol;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let mut dir: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i * n + j] * g[j]).sum()).collect();
        let mut slope = dot(&g, &dir);
        if !(slope > 0.0) {
            h = identity(n);
            fresh = true;
            dir.clone_from(&g);
            slope = dot(&g, &g);
        }

        let mut step = opts.initial_step;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            let ft = sanitize(f(&trial));
            if ft.is_finite() && ft >= fx + opts.armijo * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= opts.contraction;
        }

        let Some((x_new, f_new)) = accepted else {
            if fresh {
                break;
            }
            h = identity(n);
            fresh = true;
            continue;
        };

        let g_new = fd_gradient(&mut f, &x_new, opts.fd_step);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        // curvature pair for the minimization of -f
        let y: Vec<f64> = g.iter().zip(&g_new).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if fresh {
                let scale = sy / dot(&y, &y);
                for v in h.iter_mut() {
                    *v *= scale;
                }
            }
            let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i * n + j] * y[j]).sum()).collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
            fresh = false;
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        converged = norm(&g) < opts.grad_tol;
    }

    OptimOutcome { x, value: fx, initial_value, iterations, converged, gradient_norm: norm(&g) }
}

/// Bijections between constrained parameters and the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    /// `(0, inf)` via `exp`.
    Positive,
    /// `(lower, inf)` via `lower + exp`.
    Above(f64),
}

impl Transform {
    pub fn to_constrained(self, z: f64) -> f64 {
        match self {
            Transform::Positive => z.exp(),
            Transform::Above(lo) => lo + z.exp(),
        }
    }

    pub fn to_unconstrained(self, v: f64) -> f64 {
        match self {
            Transform::Positive => v.ln(),
            Transform::Above(lo) => (v - lo).ln(),
        }
    }
}

/// Additive log-ratio map from `R^{k-1}` onto the open `k`-simplex, with the
/// last weight as reference.
pub fn simplex_from_alr(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(0.0_f64, f64::max);
    let mut w: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    w.push((-m).exp());
    let total: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= total;
    }
    w
}

/// Inverse of [`simplex_from_alr`]; weights must be strictly positive.
pub fn alr_from_simplex(w: &[f64]) -> Vec<f64> {
    let last = w[w.len() - 1].ln();
    w[..w.len() - 1].iter().map(|v| v.ln() - last).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximizes_rosenbrock() {
        let f = |x: &[f64]| -((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let out = maximize(f, &[-1.2, 1.0], &OptimOptions { max_iter: 2000, ..Default::default() });
        assert!((out.x[0] - 1.0).abs() < 1e-4 && (out.x[1] - 1.0).abs() < 1e-4, "{out:?}");
        assert!(out.value >= out.initial_value);
    }

    #[test]
    fn quadratic_converges() {
        let f = |x: &[f64]| -(x[0] - 3.0).powi(2) - 4.0 * (x[1] + 1.0).powi(2) - x[0] * x[1];
        let out = maximize(f, &[0.0, 0.0], &OptimOptions::default());
        assert!(out.converged);
        assert!(out.gradient_norm < 1e-6);
    }

    #[test]
    fn infeasible_region_is_avoided() {
        // maximum of -(x-2)^2 on x < 1 is approached from the left
        let f = |x: &[f64]| if x[0] >= 1.0 { f64::NAN } else { -(x[0] - 2.0).powi(2) };
        let out = maximize(f, &[0.0], &OptimOptions::default());
        assert!(out.x[0] < 1.0 && out.x[0] > 0.9);
        assert!(!out.converged);
    }

    #[test]
    fn transforms_round_trip() {
        for v in [1e-3, 0.5, 1.0, 7.0, 250.0] {
            let t = Transform::Positive;
            assert!((t.to_constrained(t.to_unconstrained(v)) - v).abs() <= 1e-12 * v);
            let t = Transform::Above(1.0);
            let w = 1.0 + v;
            assert!((t.to_constrained(t.to_unconstrained(w)) - w).abs() <= 1e-12 * w);
        }
        let w = [0.2, 0.5, 0.3];
        let back = simplex_from_alr(&alr_from_simplex(&w));
        for (a, b) in w.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
