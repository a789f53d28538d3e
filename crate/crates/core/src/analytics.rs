//! Rolling-window pipeline, exposure-adjusted carry returns and the linear
//! projection of basket tail dependence onto pairwise estimates.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;
use rand::RngCore;

use crate::baskets::{build_baskets, CarrySeries};
use crate::copula::MAX_DIM;
use crate::fitting::{fit_mixture_mle, select_model, FitOptions, FitResult, ModelFamily};
use crate::ingestion::{Currency, Date, PricePanel, ReturnPanel};
use crate::marginals::{default_k_grid, fit_garch11, fit_lggd_profile, pit_transform, MarginalFit};
use crate::rng::indexed_substream;
use crate::taildep::{mixture_td, robust_td_columns, PercentileConfig, TailDepEstimate};
use crate::{Error, Result};

/// Fewest basket members with complete data for a window to be analysed.
pub const MIN_BASKET_MEMBERS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BasketTag {
    Investment,
    Funding,
}

impl BasketTag {
    pub const BOTH: [BasketTag; 2] = [BasketTag::Investment, BasketTag::Funding];

    pub fn name(self) -> &'static str {
        match self {
            BasketTag::Investment => "investment",
            BasketTag::Funding => "funding",
        }
    }
}

impl fmt::Display for BasketTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MarginModel {
    Lggd,
    Garch11,
}

impl MarginModel {
    pub fn name(self) -> &'static str {
        match self {
            MarginModel::Lggd => "lggd",
            MarginModel::Garch11 => "garch11",
        }
    }

    pub fn fit(self, x: &[f64], k_grid: &[f64]) -> Result<MarginalFit> {
        match self {
            MarginModel::Lggd => fit_lggd_profile(x, k_grid).map(MarginalFit::Lggd),
            MarginModel::Garch11 => fit_garch11(x).map(MarginalFit::Garch11),
        }
    }
}

impl fmt::Display for MarginModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MarginModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lggd" => Ok(MarginModel::Lggd),
            "garch11" | "garch" => Ok(MarginModel::Garch11),
            _ => Err(Error::Parameter(format!("unknown margin model {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tail {
    Lower,
    Upper,
}

impl Tail {
    pub fn of(self, td: &TailDepEstimate) -> f64 {
        match self {
            Tail::Lower => td.lower,
            Tail::Upper => td.upper,
        }
    }
}

/// Settings of the rolling analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    /// Trailing window length in return observations.
    pub window: usize,
    pub margin: MarginModel,
    pub families: Vec<ModelFamily>,
    pub quintiles: usize,
    /// Conditioning-set size for the basket coefficient; `None` means `n - 1`.
    pub td_h: Option<usize>,
    pub percentiles: PercentileConfig,
    pub fit: FitOptions,
    pub k_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            window: 126,
            margin: MarginModel::Lggd,
            families: ModelFamily::ALL.to_vec(),
            quintiles: crate::baskets::DEFAULT_QUINTILES,
            td_h: None,
            percentiles: PercentileConfig::default(),
            fit: FitOptions::default(),
            k_grid: default_k_grid(),
            seed: 0,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < crate::taildep::MIN_ROBUST_ROWS {
            return Err(Error::Parameter(format!(
                "window must be at least {} observations, got {}",
                crate::taildep::MIN_ROBUST_ROWS,
                self.window
            )));
        }
        if self.families.is_empty() {
            return Err(Error::Parameter("family set is empty".into()));
        }
        if self.td_h == Some(0) {
            return Err(Error::Parameter("tail-dependence h must be at least 1".into()));
        }
        if self.k_grid.is_empty() {
            return Err(Error::Parameter("k grid is empty".into()));
        }
        self.percentiles.validate()
    }
}

/// Robust pairwise estimate for two basket members.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTd {
    pub first: Currency,
    pub second: Currency,
    pub td: TailDepEstimate,
}

/// Everything computed for one basket on one day.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult {
    pub start: Date,
    pub end: Date,
    pub basket: BasketTag,
    /// Members entering the copula, in basket order.
    pub members: Vec<Currency>,
    pub margins: Vec<MarginalFit>,
    pub fits: Vec<FitResult>,
    pub fit_errors: Vec<(ModelFamily, String)>,
    pub selected: Option<ModelFamily>,
    pub parametric: Option<TailDepEstimate>,
    pub pairwise: Vec<PairTd>,
}

impl WindowResult {
    pub fn selected_fit(&self) -> Option<&FitResult> {
        self.selected.and_then(|f| self.fits.iter().find(|r| r.family == f))
    }

    pub fn pair(&self, a: Currency, b: Currency) -> Option<&PairTd> {
        self.pairwise
            .iter()
            .find(|p| (p.first == a && p.second == b) || (p.first == b && p.second == a))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WindowOutcome {
    Done(WindowResult),
    Skipped { end: Date, basket: BasketTag, reason: String },
}

impl WindowOutcome {
    pub fn end(&self) -> Date {
        match self {
            WindowOutcome::Done(r) => r.end,
            WindowOutcome::Skipped { end, .. } => *end,
        }
    }

    pub fn basket(&self) -> BasketTag {
        match self {
            WindowOutcome::Done(r) => r.basket,
            WindowOutcome::Skipped { basket, .. } => *basket,
        }
    }

    pub fn result(&self) -> Option<&WindowResult> {
        match self {
            WindowOutcome::Done(r) => Some(r),
            WindowOutcome::Skipped { .. } => None,
        }
    }
}

/// Per-day evaluator shared by the sequential and parallel drivers.
#[derive(Debug, Clone)]
pub struct RollingAnalysis<'a> {
    panel: &'a PricePanel,
    returns: ReturnPanel,
    cfg: &'a AnalysisConfig,
}

impl<'a> RollingAnalysis<'a> {
    pub fn new(panel: &'a PricePanel, cfg: &'a AnalysisConfig) -> Result<Self> {
        cfg.validate()?;
        if panel.n_dates() < cfg.window + 1 {
            return Err(Error::Sizing(format!(
                "panel spans {} dates, window of {} returns needs {}",
                panel.n_dates(),
                cfg.window,
                cfg.window + 1
            )));
        }
        Ok(Self { panel, returns: panel.log_returns(), cfg })
    }

    pub fn returns(&self) -> &ReturnPanel {
        &self.returns
    }

    /// Return-row indices at which a full trailing window ends.
    pub fn days(&self) -> Range<usize> {
        self.cfg.window - 1..self.returns.dates().len()
    }

    /// Both baskets for the window ending at return row `t`.
    pub fn evaluate(&self, t: usize) -> [WindowOutcome; 2] {
        let end = self.returns.dates()[t];
        let ratios = self.panel.ratios_at(t + 1);
        let assignment = match build_baskets(end, &ratios, self.cfg.quintiles) {
            Ok(a) => a,
            Err(e) => {
                return BasketTag::BOTH.map(|basket| WindowOutcome::Skipped { end, basket, reason: e.to_string() })
            }
        };
        BasketTag::BOTH.map(|tag| {
            let (members, most_extreme_last) = match tag {
                BasketTag::Investment => (&assignment.investment, false),
                BasketTag::Funding => (&assignment.funding, true),
            };
            let seed = indexed_substream(self.cfg.seed, "window", 2 * t as u64 + tag as u64).next_u64();
            self.basket_window(t, tag, members, most_extreme_last, seed)
                .unwrap_or_else(|reason| WindowOutcome::Skipped { end, basket: tag, reason })
        })
    }

    fn basket_window(
        &self,
        t: usize,
        tag: BasketTag,
        members: &[Currency],
        most_extreme_last: bool,
        seed: u64,
    ) -> core::result::Result<WindowOutcome, String> {
        let start_row = t + 1 - self.cfg.window;
        let mut complete: Vec<(Currency, Vec<f64>)> = members
            .iter()
            .filter_map(|ccy| {
                let c = self.returns.currency_index(*ccy)?;
                Some((*ccy, self.returns.window(c, start_row, t + 1)?))
            })
            .collect();
        if complete.len() < MIN_BASKET_MEMBERS {
            return Err(format!("{} members with complete data, need {MIN_BASKET_MEMBERS}", complete.len()));
        }
        if complete.len() > MAX_DIM {
            if most_extreme_last {
                complete.drain(..complete.len() - MAX_DIM);
            } else {
                complete.truncate(MAX_DIM);
            }
        }

        let mut margins = Vec::with_capacity(complete.len());
        for (ccy, x) in &complete {
            margins.push(self.cfg.margin.fit(x, &self.cfg.k_grid).map_err(|e| format!("margin {ccy}: {e}"))?);
        }
        let columns: Vec<Vec<f64>> = complete.iter().map(|(_, x)| x.clone()).collect();
        let pseudo = pit_transform(&columns, &margins).map_err(|e| e.to_string())?;

        let opts = FitOptions { seed, ..self.cfg.fit };
        let mut fits = Vec::new();
        let mut fit_errors = Vec::new();
        for &family in &self.cfg.families {
            match fit_mixture_mle(&pseudo, family, None, &opts) {
                Ok(f) => fits.push(f),
                Err(e) => fit_errors.push((family, e.to_string())),
            }
        }
        let best = select_model(&fits).ok_or_else(|| "no copula family could be fitted".to_string())?;
        let selected = Some(best.family);
        let dim = pseudo.dim();
        let h = self.cfg.td_h.unwrap_or(dim - 1).min(dim - 1);
        let parametric = if best.converged { mixture_td(&best.model, dim, h).ok() } else { None };

        let mut pairwise = Vec::new();
        for i in 0..dim {
            for j in i + 1..dim {
                let td = robust_td_columns(&pseudo.column(i), &pseudo.column(j), &self.cfg.percentiles)
                    .map_err(|e| e.to_string())?;
                pairwise.push(PairTd { first: complete[i].0, second: complete[j].0, td });
            }
        }
        let dates = self.returns.dates();
        Ok(WindowOutcome::Done(WindowResult {
            start: dates[start_row],
            end: dates[t],
            basket: tag,
            members: complete.into_iter().map(|(c, _)| c).collect(),
            margins,
            fits,
            fit_errors,
            selected,
            parametric,
            pairwise,
        }))
    }
}

/// Sequential rolling analysis: two outcomes per day, in date order.
pub fn rolling_analysis(panel: &PricePanel, cfg: &AnalysisConfig) -> Result<Vec<WindowOutcome>> {
    let ra = RollingAnalysis::new(panel, cfg)?;
    Ok(ra.days().flat_map(|t| ra.evaluate(t)).collect())
}

/// Parametric basket coefficients by window end date.
pub fn td_series(outcomes: &[WindowOutcome], basket: BasketTag) -> BTreeMap<Date, TailDepEstimate> {
    outcomes
        .iter()
        .filter_map(WindowOutcome::result)
        .filter(|r| r.basket == basket)
        .filter_map(|r| Some((r.end, r.parametric.clone()?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Downside,
    Upside,
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "downside" => Ok(Direction::Downside),
            "upside" => Ok(Direction::Upside),
            _ => Err(Error::Parameter(format!("unknown direction {s:?}"))),
        }
    }
}

/// Carry returns scaled by tail-dependence factors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdjustedReturns {
    pub dates: Vec<Date>,
    pub raw: Vec<f64>,
    pub adj_high: Vec<f64>,
    pub adj_low: Vec<f64>,
    pub cum_raw: Vec<f64>,
    pub cum_adj_high: Vec<f64>,
    pub cum_adj_low: Vec<f64>,
    /// No investment-basket coefficient on this date.
    pub missing_high: Vec<bool>,
    /// No funding-basket coefficient on this date.
    pub missing_low: Vec<bool>,
}

fn running_sum(x: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    x.iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

/// Scale each HML return by its basket factors.
///
/// Downside: high by `1 - upper(high)`, low by `1 - lower(low)`. Upside: high by
/// `1 + lower(high)`, low by `1 + upper(low)`. With `combine` both series carry
/// the product of the two factors. A missing coefficient leaves its factor at 1.
pub fn exposure_adjusted_returns(
    carry: &CarrySeries,
    td_high: &BTreeMap<Date, TailDepEstimate>,
    td_low: &BTreeMap<Date, TailDepEstimate>,
    direction: Direction,
    combine: bool,
) -> AdjustedReturns {
    let mut out = AdjustedReturns { dates: carry.dates.clone(), raw: carry.hml.clone(), ..Default::default() };
    for (date, r) in carry.dates.iter().zip(&carry.hml) {
        let high = td_high.get(date);
        let low = td_low.get(date);
        let f_high = high.map_or(1.0, |td| match direction {
            Direction::Downside => 1.0 - td.upper,
            Direction::Upside => 1.0 + td.lower,
        });
        let f_low = low.map_or(1.0, |td| match direction {
            Direction::Downside => 1.0 - td.lower,
            Direction::Upside => 1.0 + td.upper,
        });
        let (a, b) = if combine { (r * f_high * f_low, r * f_high * f_low) } else { (r * f_high, r * f_low) };
        out.adj_high.push(a);
        out.adj_low.push(b);
        out.missing_high.push(high.is_none());
        out.missing_low.push(low.is_none());
    }
    out.cum_raw = running_sum(&out.raw);
    out.cum_adj_high = running_sum(&out.adj_high);
    out.cum_adj_low = running_sum(&out.adj_low);
    out
}

/// A named regressor column.
#[derive(Debug, Clone, PartialEq)]
pub struct Regressor {
    pub name: String,
    pub values: Vec<f64>,
}

/// Ordinary least squares with intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// Intercept first, then one per coefficient.
    pub std_errors: Vec<f64>,
    pub r_squared: f64,
    pub n_obs: usize,
    pub names: Vec<String>,
}

/// Minimum aligned observations for [`regress_basket_td`].
pub const MIN_REGRESSION_OBS: usize = 10;

const INTERCEPT: &str = "constant";

fn collinear_partner(x: &DMatrix<f64>, j: usize) -> Option<usize> {
    let n = x.nrows() as f64;
    let centred = |k: usize| {
        let col = x.column(k);
        let mean = col.sum() / n;
        col.map(|v| v - mean)
    };
    let cj = centred(j);
    let nj = cj.norm();
    if nj <= 1e-12 * x.column(j).norm() {
        return Some(0);
    }
    (1..j).find(|&i| {
        let ci = centred(i);
        let ni = ci.norm();
        ni > 0.0 && (ci.dot(&cj) / (ni * nj)).abs() > 1.0 - 1e-10
    })
}

/// Regress the basket coefficient on pairwise coefficients by QR.
pub fn regress_basket_td(y: &[f64], regressors: &[Regressor]) -> Result<OlsFit> {
    let n = y.len();
    let p = regressors.len() + 1;
    if regressors.iter().any(|r| r.values.len() != n) {
        return Err(Error::Validation("regressors and response differ in length".into()));
    }
    if n < MIN_REGRESSION_OBS.max(p + 1) {
        return Err(Error::Precondition(format!("regression needs at least {} observations, got {n}", MIN_REGRESSION_OBS.max(p + 1))));
    }
    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { regressors[j - 1].values[i] });
    let qr = x.clone().qr();
    let r = qr.r();
    for j in 0..p {
        if r[(j, j)].abs() <= 1e-10 * x.column(j).norm().max(f64::MIN_POSITIVE) {
            let name = |k: usize| if k == 0 { INTERCEPT.to_string() } else { regressors[k - 1].name.clone() };
            return Err(Error::Regression(match collinear_partner(&x, j) {
                Some(i) => format!("regressors {} and {} are collinear", name(i), name(j)),
                None => format!("regressor {} is a linear combination of earlier columns", name(j)),
            }));
        }
    }
    let yv = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Regression("triangular solve failed".into()))?;
    let resid = &yv - &x * &beta;
    let ssr = resid.norm_squared();
    let mean = yv.sum() / n as f64;
    let sst = yv.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    if sst == 0.0 {
        return Err(Error::Regression("response is constant".into()));
    }
    let r_squared = (1.0 - ssr / sst).clamp(0.0, 1.0);
    let sigma2 = ssr / (n - p) as f64;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::Regression("triangular solve failed".into()))?;
    let cov_diag = (&r_inv * r_inv.transpose()).diagonal();
    Ok(OlsFit {
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
        std_errors: cov_diag.iter().map(|v| (sigma2 * v).sqrt()).collect(),
        r_squared,
        n_obs: n,
        names: regressors.iter().map(|r| r.name.clone()).collect(),
    })
}

/// Response and pairwise regressors for one basket and tail.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionInputs {
    pub currencies: [Currency; 3],
    pub dates: Vec<Date>,
    pub y: Vec<f64>,
    pub regressors: Vec<Regressor>,
}

/// Three most frequent basket members, and the days on which all three are
/// present with a parametric coefficient.
pub fn regression_inputs(outcomes: &[WindowOutcome], basket: BasketTag, tail: Tail) -> Result<RegressionInputs> {
    let results: Vec<&WindowResult> =
        outcomes.iter().filter_map(WindowOutcome::result).filter(|r| r.basket == basket).collect();
    let mut counts: BTreeMap<Currency, usize> = BTreeMap::new();
    for r in &results {
        for c in &r.members {
            *counts.entry(*c).or_default() += 1;
        }
    }
    let mut ranked: Vec<(Currency, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    if ranked.len() < 3 {
        return Err(Error::Precondition(format!("{basket} basket has fewer than 3 distinct members")));
    }
    let mut top: Vec<Currency> = ranked.iter().take(3).map(|c| c.0).collect();
    top.sort();
    let currencies = [top[0], top[1], top[2]];
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let wanted: BTreeSet<Currency> = top.iter().copied().collect();

    let mut dates = Vec::new();
    let mut y = Vec::new();
    let mut cols = vec![Vec::new(); 3];
    for r in results {
        let present: BTreeSet<Currency> = r.members.iter().copied().collect();
        if !wanted.is_subset(&present) {
            continue;
        }
        let Some(td) = &r.parametric else { continue };
        let Some(pw): Option<Vec<f64>> =
            pairs.iter().map(|&(a, b)| r.pair(currencies[a], currencies[b]).map(|p| tail.of(&p.td))).collect()
        else {
            continue;
        };
        dates.push(r.end);
        y.push(tail.of(td));
        for (col, v) in cols.iter_mut().zip(pw) {
            col.push(v);
        }
    }
    let regressors = pairs
        .iter()
        .zip(cols)
        .map(|(&(a, b), values)| Regressor { name: format!("{}/{}", currencies[a], currencies[b]), values })
        .collect();
    Ok(RegressionInputs { currencies, dates, y, regressors })
}
