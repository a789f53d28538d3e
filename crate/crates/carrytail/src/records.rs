//! JSON shapes for fitted models and window results.

use std::collections::BTreeMap;

use carrytail_core::analytics::{OlsFit, WindowOutcome, WindowResult};
use carrytail_core::copula::{Family, Generator, MixtureCopula};
use carrytail_core::fitting::{FitResult, ModelFamily};
use carrytail_core::marginals::MarginalFit;
use carrytail_core::taildep::{TailDepEstimate, TdKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub family: String,
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

/// `{components:[{family,theta,beta?}], weights, dim}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub components: Vec<ComponentRecord>,
    pub weights: Vec<f64>,
    pub dim: usize,
}

impl From<&MixtureCopula> for ModelRecord {
    fn from(m: &MixtureCopula) -> Self {
        ModelRecord {
            components: m
                .components()
                .iter()
                .map(|g| ComponentRecord {
                    family: g.family().name().to_string(),
                    theta: g.theta(),
                    beta: (g.family() == Family::OpClayton).then(|| g.beta()),
                })
                .collect(),
            weights: m.weights().to_vec(),
            dim: m.dim(),
        }
    }
}

impl TryFrom<&ModelRecord> for MixtureCopula {
    type Error = carrytail_core::Error;

    fn try_from(r: &ModelRecord) -> Result<Self, Self::Error> {
        let gens = r
            .components
            .iter()
            .map(|c| Generator::new(c.family.parse()?, c.theta, c.beta))
            .collect::<Result<Vec<_>, _>>()?;
        MixtureCopula::new(gens, r.weights.clone(), r.dim)
    }
}

/// `{family, params:{...}, weights:[...], loglik, aic, converged, iterations}`
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRecord {
    pub family: String,
    pub params: BTreeMap<String, f64>,
    pub weights: Vec<f64>,
    pub loglik: f64,
    pub aic: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
}

impl From<&FitResult> for FitRecord {
    fn from(f: &FitResult) -> Self {
        let c = f.model.components();
        let params: BTreeMap<String, f64> = match f.family {
            ModelFamily::Cfg => [("theta_clayton", c[0].theta()), ("theta_frank", c[1].theta()), ("theta_gumbel", c[2].theta())]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            ModelFamily::Cg => [("theta_clayton", c[0].theta()), ("theta_gumbel", c[1].theta())]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            ModelFamily::Opc => [("theta", c[0].theta()), ("beta", c[0].beta())]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        };
        FitRecord {
            family: f.family.name().to_string(),
            params,
            weights: f.model.weights().to_vec(),
            loglik: f.loglik_copula,
            aic: f.aic,
            converged: f.converged,
            iterations: f.iterations,
            gradient_norm: f.gradient_norm,
        }
    }
}

/// `{currency, window_start, window_end, model, params, loglik, aic}`
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginRecord {
    pub currency: String,
    pub window_start: String,
    pub window_end: String,
    pub model: String,
    pub params: BTreeMap<String, f64>,
    pub loglik: f64,
    pub aic: f64,
}

impl MarginRecord {
    pub fn new(currency: &str, start: &str, end: &str, fit: &MarginalFit) -> Self {
        let (model, params): (&str, Vec<(&str, f64)>) = match fit {
            MarginalFit::Lggd(p) => ("lggd", vec![("k", p.k), ("u", p.u), ("b", p.b)]),
            MarginalFit::Garch11(p) => (
                "garch11",
                vec![("mu", p.mu), ("alpha0", p.alpha0), ("alpha1", p.alpha1), ("beta1", p.beta1)],
            ),
        };
        MarginRecord {
            currency: currency.to_string(),
            window_start: start.to_string(),
            window_end: end.to_string(),
            model: model.to_string(),
            params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            loglik: fit.loglik(),
            aic: fit.aic(),
        }
    }
}

pub fn kind_label(kind: &TdKind, family: Option<ModelFamily>) -> String {
    match kind {
        TdKind::Parametric { n, h } => match family {
            Some(f) => format!("parametric:{f}:n={n}:h={h}"),
            None => format!("parametric:n={n}:h={h}"),
        },
        TdKind::Empirical { upper, lower } => {
            format!("empirical:upper={}-{}:lower={}-{}", upper.start(), upper.end(), lower.start(), lower.end())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TdRecord {
    pub lower: f64,
    pub upper: f64,
    pub kind: String,
    pub degenerate: bool,
}

impl TdRecord {
    pub fn new(td: &TailDepEstimate, family: Option<ModelFamily>) -> Self {
        TdRecord { lower: td.lower, upper: td.upper, kind: kind_label(&td.kind, family), degenerate: td.degenerate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRecord {
    pub ccy_i: String,
    pub ccy_j: String,
    #[serde(flatten)]
    pub td: TdRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitErrorRecord {
    pub family: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowRecord {
    pub start: String,
    pub end: String,
    pub basket: String,
    pub members: Vec<String>,
    pub margins: Vec<MarginRecord>,
    pub fits: Vec<FitRecord>,
    pub fit_errors: Vec<FitErrorRecord>,
    pub selected: Option<String>,
    pub selected_model: Option<ModelRecord>,
    pub parametric: Option<TdRecord>,
    pub pairwise: Vec<PairRecord>,
}

impl From<&WindowResult> for WindowRecord {
    fn from(r: &WindowResult) -> Self {
        let start = r.start.to_string();
        let end = r.end.to_string();
        WindowRecord {
            members: r.members.iter().map(ToString::to_string).collect(),
            margins: r
                .members
                .iter()
                .zip(&r.margins)
                .map(|(c, m)| MarginRecord::new(c.as_str(), &start, &end, m))
                .collect(),
            fits: r.fits.iter().map(FitRecord::from).collect(),
            fit_errors: r
                .fit_errors
                .iter()
                .map(|(f, e)| FitErrorRecord { family: f.name().to_string(), error: e.clone() })
                .collect(),
            selected: r.selected.map(|f| f.name().to_string()),
            selected_model: r.selected_fit().map(|f| ModelRecord::from(&f.model)),
            parametric: r.parametric.as_ref().map(|td| TdRecord::new(td, r.selected)),
            pairwise: r
                .pairwise
                .iter()
                .map(|p| PairRecord { ccy_i: p.first.to_string(), ccy_j: p.second.to_string(), td: TdRecord::new(&p.td, None) })
                .collect(),
            basket: r.basket.name().to_string(),
            start,
            end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedRecord {
    pub end: String,
    pub basket: String,
    pub skipped: String,
}

/// One line of `windows.jsonl`.
pub fn outcome_json(o: &WindowOutcome) -> serde_json::Result<String> {
    match o {
        WindowOutcome::Done(r) => serde_json::to_string(&WindowRecord::from(r)),
        WindowOutcome::Skipped { end, basket, reason } => serde_json::to_string(&SkippedRecord {
            end: end.to_string(),
            basket: basket.name().to_string(),
            skipped: reason.clone(),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsRecord {
    pub names: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// Constant first.
    pub std_errors: Vec<f64>,
    pub r_squared: f64,
    pub n_obs: usize,
}

impl From<&OlsFit> for OlsRecord {
    fn from(f: &OlsFit) -> Self {
        OlsRecord {
            names: f.names.clone(),
            intercept: f.intercept,
            coefficients: f.coefficients.clone(),
            std_errors: f.std_errors.clone(),
            r_squared: f.r_squared,
            n_obs: f.n_obs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_round_trip() {
        let m = MixtureCopula::new(
            vec![Generator::clayton(2.0).unwrap(), Generator::op_clayton(1.0, 1.5).unwrap()],
            vec![0.25, 0.75],
            3,
        )
        .unwrap();
        let rec = ModelRecord::from(&m);
        let json = serde_json::to_string(&rec).unwrap();
        assert_eq!(
            json,
            r#"{"components":[{"family":"clayton","theta":2.0},{"family":"op_clayton","theta":1.0,"beta":1.5}],"weights":[0.25,0.75],"dim":3}"#
        );
        let back: ModelRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(MixtureCopula::try_from(&back).unwrap(), m);
    }

    #[test]
    fn invalid_model_is_rejected() {
        let rec: ModelRecord =
            serde_json::from_str(r#"{"components":[{"family":"gumbel","theta":0.5}],"weights":[1.0],"dim":2}"#).unwrap();
        let err = MixtureCopula::try_from(&rec).unwrap_err();
        assert!(err.to_string().contains("theta must be >= 1"));
    }
}
