//! Archimedean copulas and their finite mixtures.

mod generator;
mod sampling;

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

pub use generator::{DerivKernel, Family, Generator, MAX_ORDER};
pub use sampling::{sample_copula, sample_copula_seeded};

pub const MAX_DIM: usize = 5;
pub const MAX_COMPONENTS: usize = 3;

impl Generator {
    /// `C(u) = psi(sum_j psi^{-1}(u_j))`.
    pub fn cdf(&self, u: &[f64]) -> Result<f64> {
        if u.len() < 2 {
            return Err(Error::Domain("copula needs at least two coordinates".to_string()));
        }
        let mut t = 0.0;
        for &v in u {
            t += self.psi_inverse(v)?;
        }
        Ok(self.psi(t))
    }
}

/// Convex combination of Archimedean copulas sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureCopula {
    components: Vec<Generator>,
    weights: Vec<f64>,
    dim: usize,
}

impl MixtureCopula {
    pub fn new(components: Vec<Generator>, weights: Vec<f64>, dim: usize) -> Result<Self> {
        if components.is_empty() || components.len() > MAX_COMPONENTS {
            return Err(Error::Parameter(format!(
                "mixture needs 1..={MAX_COMPONENTS} components, got {}",
                components.len()
            )));
        }
        if weights.len() != components.len() {
            return Err(Error::Parameter("one weight per component is required".to_string()));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && *w <= 1.0)) {
            return Err(Error::Parameter("weights must lie in [0, 1]".to_string()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("weights sum to {total}, not 1")));
        }
        for g in &components {
            g.check_dimension(dim)?;
        }
        Ok(Self { components, weights, dim })
    }

    pub fn single(g: Generator, dim: usize) -> Result<Self> {
        Self::new(alloc::vec![g], alloc::vec![1.0], dim)
    }

    pub fn components(&self) -> &[Generator] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_point(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim {
            return Err(Error::Domain(format!("expected {} coordinates, got {}", self.dim, u.len())));
        }
        Ok(())
    }

    pub fn cdf(&self, u: &[f64]) -> Result<f64> {
        self.check_point(u)?;
        let mut c = 0.0;
        for (g, w) in self.components.iter().zip(&self.weights) {
            c += w * g.cdf(u)?;
        }
        Ok(c)
    }

    /// Density at an interior point.
    pub fn density(&self, u: &[f64]) -> Result<f64> {
        Ok(self.log_density(u)?.exp())
    }

    pub fn log_density(&self, u: &[f64]) -> Result<f64> {
        self.prepare().log_density(u)
    }

    /// Precompute derivative kernels for repeated density evaluation.
    pub fn prepare(&self) -> PreparedMixture {
        let parts = self
            .components
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(g, w)| PreparedComponent {
                generator: *g,
                ln_weight: w.ln(),
                independent: g.family() == Family::Gumbel && g.theta() == 1.0,
                // orders are within 1..=MAX_ORDER by construction
                top: g.kernel(self.dim).expect("dimension checked"),
                first: g.kernel(1).expect("order 1"),
            })
            .collect();
        PreparedMixture { dim: self.dim, parts }
    }
}

#[derive(Debug, Clone)]
struct PreparedComponent {
    generator: Generator,
    ln_weight: f64,
    independent: bool,
    top: DerivKernel,
    first: DerivKernel,
}

impl PreparedComponent {
    fn log_density(&self, u: &[f64]) -> Result<f64> {
        if self.independent {
            return Ok(0.0);
        }
        let mut total = 0.0;
        let mut jac = 0.0;
        for &v in u {
            let t = self.generator.psi_inverse(v)?;
            total += t;
            jac += self.first.eval(t).0;
        }
        let (top, sign) = self.top.eval(total);
        // sign of psi^(d) is (-1)^d and the d first derivatives carry (-1)^d
        let expected = if u.len() % 2 == 0 { 1.0 } else { -1.0 };
        if sign != expected {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(top - jac)
    }
}

/// Mixture with derivative kernels built once.
#[derive(Debug, Clone)]
pub struct PreparedMixture {
    dim: usize,
    parts: Vec<PreparedComponent>,
}

impl PreparedMixture {
    /// `ln c(u)` evaluated in log space; `u` must be strictly interior.
    pub fn log_density(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim {
            return Err(Error::Domain(format!("expected {} coordinates, got {}", self.dim, u.len())));
        }
        if let Some(v) = u.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::Domain(format!("density needs interior points, got {v}")));
        }
        let mut logs = [0.0; MAX_COMPONENTS];
        let mut m = f64::NEG_INFINITY;
        for (slot, p) in logs.iter_mut().zip(&self.parts) {
            *slot = p.ln_weight + p.log_density(u)?;
            m = m.max(*slot);
        }
        if m == f64::NEG_INFINITY || m.is_nan() {
            return Ok(m);
        }
        let s: f64 = logs[..self.parts.len()].iter().map(|l| (l - m).exp()).sum();
        Ok(m + s.ln())
    }
}
