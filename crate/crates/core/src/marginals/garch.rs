//! GARCH(1,1) with Gaussian quasi-likelihood.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::optim::{maximize, OptimOptions};
use crate::{Error, Result};

/// `sigma2[t] = alpha0 + alpha1 * (x[t-1] - mu)^2 + beta1 * sigma2[t-1]`,
/// started at the sample variance.
#[derive(Debug, Clone, PartialEq)]
pub struct GarchParams {
    pub mu: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub loglik: f64,
    pub n: usize,
    /// Conditional variance for every observation.
    pub sigma2: Vec<f64>,
    pub converged: bool,
}

impl GarchParams {
    /// `(x - mu) / sigma` for the fitted series.
    pub fn standardized_residuals(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.sigma2).map(|(v, s)| (v - self.mu) / s.sqrt()).collect()
    }
}

pub(crate) fn variance_path(x: &[f64], mu: f64, a0: f64, a1: f64, b1: f64, init: f64) -> Vec<f64> {
    let mut s2 = Vec::with_capacity(x.len());
    s2.push(init);
    for t in 1..x.len() {
        let e = x[t - 1] - mu;
        s2.push(a0 + a1 * e * e + b1 * s2[t - 1]);
    }
    s2
}

fn gaussian_loglik(x: &[f64], mu: f64, s2: &[f64]) -> f64 {
    let ln2pi = (2.0 * PI).ln();
    x.iter()
        .zip(s2)
        .map(|(v, s)| {
            let e = v - mu;
            -0.5 * (ln2pi + s.ln() + e * e / s)
        })
        .sum()
}

/// `(alpha1, beta1)` from two free coordinates; the softmax keeps
/// `alpha1 + beta1 < 1`.
fn persistence(p1: f64, p2: f64) -> (f64, f64) {
    let m = p1.max(p2).max(0.0);
    let (e1, e2, e0) = ((p1 - m).exp(), (p2 - m).exp(), (-m).exp());
    let total = e0 + e1 + e2;
    (e1 / total, e2 / total)
}

fn free_coords(a1: f64, b1: f64) -> (f64, f64) {
    let rest = 1.0 - a1 - b1;
    ((a1 / rest).ln(), (b1 / rest).ln())
}

/// Gaussian quasi-maximum-likelihood fit.
///
/// The optimization runs on the standardized series and is mapped back, which
/// leaves the estimates unchanged (the model is scale equivariant).
pub fn fit_garch11(samples: &[f64]) -> Result<GarchParams> {
    let n = samples.len();
    if n < 50 {
        return Err(Error::Precondition(format!("GARCH(1,1) needs at least 50 samples, got {n}")));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("samples must be finite".into()));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    if !(var > 0.0) || samples.iter().all(|v| *v == samples[0]) {
        return Err(Error::Precondition("GARCH(1,1) needs a non-constant sample".into()));
    }
    let sd = var.sqrt();
    let x: Vec<f64> = samples.iter().map(|v| (v - mean) / sd).collect();

    let objective = |z: &[f64]| {
        let (a1, b1) = persistence(z[2], z[3]);
        let a0 = z[1].exp();
        let s2 = variance_path(&x, z[0], a0, a1, b1, 1.0);
        gaussian_loglik(&x, z[0], &s2) / n as f64
    };

    let opts = OptimOptions::default();
    let starts = [(0.05, 0.90), (0.10, 0.80), (0.15, 0.60)];
    let mut best = None;
    for (a1, b1) in starts {
        let (p1, p2) = free_coords(a1, b1);
        let z0 = [0.0, (1.0 - a1 - b1).ln(), p1, p2];
        let out = maximize(objective, &z0, &opts);
        if best.as_ref().is_none_or(|b: &crate::optim::OptimOutcome| out.value > b.value) {
            best = Some(out);
        }
    }
    let out = best.expect("at least one start");

    let (alpha1, beta1) = persistence(out.x[2], out.x[3]);
    let mu = mean + sd * out.x[0];
    let alpha0 = out.x[1].exp() * var;
    let sigma2 = variance_path(samples, mu, alpha0, alpha1, beta1, var);
    let loglik = gaussian_loglik(samples, mu, &sigma2);

    // a coefficient pinned at a bound with the likelihood still rising across
    // it means the constrained optimum was not reached
    let at_bound = alpha1 < 1e-6 || beta1 < 1e-6 || alpha1 + beta1 > 1.0 - 1e-6;
    let converged = out.converged && !at_bound && loglik.is_finite();

    Ok(GarchParams { mu, alpha0, alpha1, beta1, loglik, n, sigma2, converged })
}
