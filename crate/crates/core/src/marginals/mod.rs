//! Per-currency marginal models and the probability integral transform.

mod garch;
mod lggd;

use alloc::format;
use alloc::vec::Vec;

use crate::special::normal_cdf;
use crate::{Error, MarginSource, PseudoSample, Result};

pub use garch::{fit_garch11, GarchParams};
pub use lggd::{default_k_grid, fit_lggd_profile, profile_lggd, LggdParams};

/// Clamp applied to every pseudo-observation.
pub const PIT_EPS: f64 = 1e-10;

/// Akaike information criterion.
pub fn aic(loglik: f64, n_params: usize) -> f64 {
    2.0 * n_params as f64 - 2.0 * loglik
}

/// A fitted marginal model for one currency window.
#[derive(Debug, Clone, PartialEq)]
pub enum MarginalFit {
    Lggd(LggdParams),
    Garch11(GarchParams),
}

impl MarginalFit {
    pub fn loglik(&self) -> f64 {
        match self {
            MarginalFit::Lggd(p) => p.loglik,
            MarginalFit::Garch11(p) => p.loglik,
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            MarginalFit::Lggd(_) => 3,
            MarginalFit::Garch11(_) => 4,
        }
    }

    pub fn aic(&self) -> f64 {
        aic(self.loglik(), self.n_params())
    }

    pub fn source(&self) -> MarginSource {
        match self {
            MarginalFit::Lggd(_) => MarginSource::Lggd,
            MarginalFit::Garch11(_) => MarginSource::Garch11,
        }
    }

    /// Pseudo-observations for the series the model was fitted on.
    fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        let raw: Vec<f64> = match self {
            MarginalFit::Lggd(p) => x.iter().map(|&y| p.cdf(y)).collect(),
            MarginalFit::Garch11(p) => {
                if p.sigma2.len() != x.len() {
                    return Err(Error::Validation(format!(
                        "GARCH fit covers {} observations, column has {}",
                        p.sigma2.len(),
                        x.len()
                    )));
                }
                x.iter().zip(&p.sigma2).map(|(v, s2)| normal_cdf((v - p.mu) / libm::sqrt(*s2))).collect()
            }
        };
        Ok(raw.into_iter().map(|u| u.clamp(PIT_EPS, 1.0 - PIT_EPS)).collect())
    }
}

/// Map each column through its fitted marginal CDF.
///
/// l.g.g.d. columns use the fitted CDF directly; GARCH columns use the
/// standard normal CDF of the standardized residuals.
pub fn pit_transform(columns: &[Vec<f64>], fits: &[MarginalFit]) -> Result<PseudoSample> {
    if columns.len() != fits.len() {
        return Err(Error::Validation(format!("{} columns but {} fits", columns.len(), fits.len())));
    }
    let cols = columns
        .iter()
        .zip(fits)
        .map(|(c, f)| f.transform(c))
        .collect::<Result<Vec<_>>>()?;
    PseudoSample::from_columns(&cols, fits.iter().map(MarginalFit::source).collect())
}
