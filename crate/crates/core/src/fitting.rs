//! Second-stage maximum likelihood for mixture copulas on pseudo-observations.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand_distr::{Distribution, StandardNormal};

use crate::copula::{Generator, MixtureCopula};
use crate::marginals::aic;
use crate::optim::{alr_from_simplex, maximize, simplex_from_alr, OptimOptions, Transform};
use crate::rng::substream;
use crate::{Error, PseudoSample, Result};

/// Minimum rows accepted by [`fit_mixture_mle`].
pub const MIN_FIT_ROWS: usize = 50;

/// Candidate copula models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelFamily {
    /// Clayton-Frank-Gumbel mixture.
    Cfg,
    /// Clayton-Gumbel mixture.
    Cg,
    /// Outer-power Clayton.
    Opc,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 3] = [ModelFamily::Cfg, ModelFamily::Cg, ModelFamily::Opc];

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Cfg => "cfg",
            ModelFamily::Cg => "cg",
            ModelFamily::Opc => "opc",
        }
    }

    /// Parameter count used in the AIC. By default every mixture weight is
    /// counted (6 / 4 / 2); with `free_weights` the redundant one is not.
    pub fn n_params(self, free_weights: bool) -> usize {
        match (self, free_weights) {
            (ModelFamily::Cfg, false) => 6,
            (ModelFamily::Cfg, true) => 5,
            (ModelFamily::Cg, false) => 4,
            (ModelFamily::Cg, true) => 3,
            (ModelFamily::Opc, _) => 2,
        }
    }

    /// Default starting model.
    pub fn default_init(self, dim: usize) -> Result<MixtureCopula> {
        match self {
            ModelFamily::Cfg => MixtureCopula::new(
                vec![Generator::clayton(1.0)?, Generator::frank(1.0)?, Generator::gumbel(1.5)?],
                vec![1.0 / 3.0, 1.0 / 3.0, 1.0 - 2.0 / 3.0],
                dim,
            ),
            ModelFamily::Cg => MixtureCopula::new(
                vec![Generator::clayton(1.0)?, Generator::gumbel(1.5)?],
                vec![0.5, 0.5],
                dim,
            ),
            ModelFamily::Opc => MixtureCopula::single(Generator::op_clayton(1.0, 1.1)?, dim),
        }
    }

    /// Unconstrained coordinates of a model of this family.
    pub fn to_unconstrained(self, model: &MixtureCopula) -> Result<Vec<f64>> {
        let c = model.components();
        let shape_ok = match self {
            ModelFamily::Cfg => {
                c.len() == 3
                    && [c[0].family(), c[1].family(), c[2].family()]
                        == [crate::copula::Family::Clayton, crate::copula::Family::Frank, crate::copula::Family::Gumbel]
            }
            ModelFamily::Cg => {
                c.len() == 2
                    && [c[0].family(), c[1].family()] == [crate::copula::Family::Clayton, crate::copula::Family::Gumbel]
            }
            ModelFamily::Opc => c.len() == 1 && c[0].family() == crate::copula::Family::OpClayton,
        };
        if !shape_ok {
            return Err(Error::Parameter(format!("model does not match the {} family", self.name())));
        }
        let pos = Transform::Positive;
        let above = Transform::Above(1.0);
        let mut z = match self {
            ModelFamily::Cfg => vec![
                pos.to_unconstrained(c[0].theta()),
                pos.to_unconstrained(c[1].theta()),
                above.to_unconstrained(c[2].theta()),
            ],
            ModelFamily::Cg => vec![pos.to_unconstrained(c[0].theta()), above.to_unconstrained(c[1].theta())],
            ModelFamily::Opc => vec![pos.to_unconstrained(c[0].theta()), above.to_unconstrained(c[0].beta())],
        };
        if self != ModelFamily::Opc {
            z.extend(alr_from_simplex(model.weights()));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("model sits on a parameter boundary".into()));
        }
        Ok(z)
    }

    /// Model for unconstrained coordinates `z`.
    pub fn from_unconstrained(self, z: &[f64], dim: usize) -> Result<MixtureCopula> {
        let pos = Transform::Positive;
        let above = Transform::Above(1.0);
        match self {
            ModelFamily::Cfg => MixtureCopula::new(
                vec![
                    Generator::clayton(pos.to_constrained(z[0]))?,
                    Generator::frank(pos.to_constrained(z[1]))?,
                    Generator::gumbel(above.to_constrained(z[2]))?,
                ],
                simplex_from_alr(&z[3..5]),
                dim,
            ),
            ModelFamily::Cg => MixtureCopula::new(
                vec![Generator::clayton(pos.to_constrained(z[0]))?, Generator::gumbel(above.to_constrained(z[1]))?],
                simplex_from_alr(&z[2..3]),
                dim,
            ),
            ModelFamily::Opc => MixtureCopula::single(
                Generator::op_clayton(pos.to_constrained(z[0]), above.to_constrained(z[1]))?,
                dim,
            ),
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cfg" => Ok(ModelFamily::Cfg),
            "cg" => Ok(ModelFamily::Cg),
            "opc" => Ok(ModelFamily::Opc),
            _ => Err(Error::Parameter(format!("unknown model family {s:?}"))),
        }
    }
}

/// Copula part of the two-stage log-likelihood, `sum_i ln c(u_i)`.
pub fn copula_loglik(pseudo: &PseudoSample, model: &MixtureCopula) -> Result<f64> {
    if pseudo.dim() != model.dim() {
        return Err(Error::Validation(format!(
            "pseudo-sample has {} columns, model expects {}",
            pseudo.dim(),
            model.dim()
        )));
    }
    let prepared = model.prepare();
    let mut total = 0.0;
    for (i, row) in pseudo.rows().enumerate() {
        let l = prepared.log_density(row)?;
        if !l.is_finite() {
            return Err(Error::Evaluation(format!("copula density is not finite at row {i}")));
        }
        total += l;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub optim: OptimOptions,
    /// Random restarts in addition to the initial point.
    pub restarts: usize,
    pub seed: u64,
    pub aic_free_weights: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { optim: OptimOptions::default(), restarts: 2, seed: 0, aic_free_weights: false }
    }
}

/// Fitted copula with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub family: ModelFamily,
    pub model: MixtureCopula,
    pub loglik_copula: f64,
    /// Log-likelihood at the supplied (or default) starting point.
    pub init_loglik: f64,
    pub n_params: usize,
    pub aic: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Gradient norm of the per-row mean log-likelihood in optimizer coordinates.
    pub gradient_norm: f64,
}

/// Maximum-likelihood fit of one model family.
///
/// The optimizer works on the per-row mean log-likelihood so the gradient
/// tolerance does not scale with the sample size.
pub fn fit_mixture_mle(
    pseudo: &PseudoSample,
    family: ModelFamily,
    init: Option<&MixtureCopula>,
    opts: &FitOptions,
) -> Result<FitResult> {
    let n = pseudo.n_rows();
    let dim = pseudo.dim();
    if n < MIN_FIT_ROWS {
        return Err(Error::Precondition(format!("copula fit needs at least {MIN_FIT_ROWS} rows, got {n}")));
    }
    if !(2..=crate::copula::MAX_DIM).contains(&dim) {
        return Err(Error::Precondition(format!("copula fit needs 2..=5 columns, got {dim}")));
    }
    let start = match init {
        Some(m) => family.to_unconstrained(m)?,
        None => family.to_unconstrained(&family.default_init(dim)?)?,
    };
    let objective = |z: &[f64]| match family.from_unconstrained(z, dim) {
        Ok(m) => copula_loglik(pseudo, &m).map_or(f64::NAN, |l| l / n as f64),
        Err(_) => f64::NAN,
    };
    let init_loglik = objective(&start) * n as f64;

    let mut starts = vec![start.clone()];
    let mut rng = substream(opts.seed, "copula-restarts");
    for _ in 0..opts.restarts {
        starts.push(
            start
                .iter()
                .map(|v| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    v + e
                })
                .collect(),
        );
    }

    let mut best: Option<crate::optim::OptimOutcome> = None;
    for z0 in &starts {
        let out = maximize(objective, z0, &opts.optim);
        if out.value.is_finite() && best.as_ref().is_none_or(|b| out.value > b.value) {
            best = Some(out);
        }
    }
    let out = best.ok_or_else(|| Error::Fit(format!("{} likelihood not finite at any start", family.name())))?;
    let model = family.from_unconstrained(&out.x, dim)?;
    let loglik = copula_loglik(pseudo, &model)?;
    let n_params = family.n_params(opts.aic_free_weights);
    Ok(FitResult {
        family,
        model,
        loglik_copula: loglik,
        init_loglik,
        n_params,
        aic: aic(loglik, n_params),
        iterations: out.iterations,
        converged: out.converged,
        gradient_norm: out.gradient_norm,
    })
}

/// Lowest AIC; ties go to the model with fewer parameters.
pub fn select_model(fits: &[FitResult]) -> Option<&FitResult> {
    fits.iter().min_by(|a, b| {
        a.aic
            .partial_cmp(&b.aic)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.n_params.cmp(&b.n_params))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::sample_copula_seeded;

    fn clayton_model(theta: f64, dim: usize) -> MixtureCopula {
        MixtureCopula::single(Generator::clayton(theta).unwrap(), dim).unwrap()
    }

    #[test]
    fn independence_loglik_is_zero() {
        let s = sample_copula_seeded(&clayton_model(2.0, 3), 300, 1);
        let ind = MixtureCopula::single(Generator::gumbel(1.0).unwrap(), 3).unwrap();
        assert_eq!(copula_loglik(&s, &ind).unwrap(), 0.0);
    }

    #[test]
    fn true_parameter_beats_neighbours() {
        let s = sample_copula_seeded(&clayton_model(2.0, 2), 2000, 2);
        let at = |t| copula_loglik(&s, &clayton_model(t, 2)).unwrap();
        assert!(at(2.0) >= at(1.0) && at(2.0) >= at(4.0));
    }

    #[test]
    fn duplicated_and_permuted_data() {
        let s = sample_copula_seeded(&clayton_model(1.5, 3), 200, 3);
        let m = clayton_model(1.5, 3);
        let single = copula_loglik(&s, &m).unwrap();
        let rows: Vec<Vec<f64>> = s.rows().chain(s.rows()).map(<[f64]>::to_vec).collect();
        let doubled = PseudoSample::from_rows(&rows, crate::MarginSource::Simulated).unwrap();
        assert!((copula_loglik(&doubled, &m).unwrap() - 2.0 * single).abs() < 1e-12 * single.abs());
        let mut rev: Vec<Vec<f64>> = s.rows().map(<[f64]>::to_vec).collect();
        rev.reverse();
        let rev = PseudoSample::from_rows(&rev, crate::MarginSource::Simulated).unwrap();
        assert!((copula_loglik(&rev, &m).unwrap() - single).abs() < 1e-12 * single.abs());
    }

    #[test]
    fn reparameterization_round_trip() {
        let cfg = MixtureCopula::new(
            vec![Generator::clayton(2.3).unwrap(), Generator::frank(4.1).unwrap(), Generator::gumbel(1.7).unwrap()],
            vec![0.2, 0.5, 0.3],
            3,
        )
        .unwrap();
        let back = ModelFamily::Cfg.from_unconstrained(&ModelFamily::Cfg.to_unconstrained(&cfg).unwrap(), 3).unwrap();
        for (a, b) in cfg.components().iter().zip(back.components()) {
            assert!((a.theta() - b.theta()).abs() < 1e-12 * a.theta());
        }
        for (a, b) in cfg.weights().iter().zip(back.weights()) {
            assert!((a - b).abs() < 1e-12);
        }
        let opc = MixtureCopula::single(Generator::op_clayton(0.7, 1.4).unwrap(), 2).unwrap();
        let back = ModelFamily::Opc.from_unconstrained(&ModelFamily::Opc.to_unconstrained(&opc).unwrap(), 2).unwrap();
        assert!((back.components()[0].beta() - 1.4).abs() < 1e-12);
        assert!(ModelFamily::Cg.to_unconstrained(&opc).is_err());
    }

    #[test]
    fn fit_recovers_clayton_via_opc_and_ascends() {
        let s = sample_copula_seeded(&clayton_model(2.0, 2), 1500, 4);
        let fit = fit_mixture_mle(&s, ModelFamily::Opc, None, &FitOptions::default()).unwrap();
        assert!(fit.loglik_copula >= fit.init_loglik);
        let g = fit.model.components()[0];
        assert!((g.theta() - 2.0).abs() < 0.3, "{fit:?}");
        assert!(g.beta() < 1.1, "{fit:?}");
        assert_eq!(fit.aic, 2.0 * 2.0 - 2.0 * fit.loglik_copula);
    }

    #[test]
    fn fit_is_deterministic() {
        let s = sample_copula_seeded(&clayton_model(1.0, 3), 200, 5);
        let a = fit_mixture_mle(&s, ModelFamily::Cg, None, &FitOptions::default()).unwrap();
        let b = fit_mixture_mle(&s, ModelFamily::Cg, None, &FitOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn preconditions() {
        let s = sample_copula_seeded(&clayton_model(1.0, 2), 20, 6);
        assert!(matches!(
            fit_mixture_mle(&s, ModelFamily::Cg, None, &FitOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    fn dummy(family: ModelFamily, aic: f64) -> FitResult {
        FitResult {
            family,
            model: clayton_model(1.0, 2),
            loglik_copula: 0.0,
            init_loglik: 0.0,
            n_params: family.n_params(false),
            aic,
            iterations: 0,
            converged: true,
            gradient_norm: 0.0,
        }
    }

    #[test]
    fn selection_rules() {
        let fits = [dummy(ModelFamily::Cfg, 10.0), dummy(ModelFamily::Cg, 12.0), dummy(ModelFamily::Opc, 9.0)];
        assert_eq!(select_model(&fits).unwrap().family, ModelFamily::Opc);
        let tied = [dummy(ModelFamily::Cfg, 5.0), dummy(ModelFamily::Cg, 5.0)];
        assert_eq!(select_model(&tied).unwrap().family, ModelFamily::Cg);
        assert!(select_model(&[]).is_none());
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(
            ModelFamily::ALL.map(|f| f.n_params(false)),
            [6, 4, 2]
        );
        assert_eq!(ModelFamily::ALL.map(|f| f.n_params(true)), [5, 3, 2]);
    }
}
