//! Tail-dependence coefficients: closed forms for Archimedean families and
//! mixtures, plus the rank-based pairwise estimator.
//!
//! For the parametric coefficients `h` is the size of the conditioning set:
//! the lower coefficient is `lim P(U_1..U_n <= u | U_1..U_h <= u)` and the
//! upper one the same with exceedances. `h = n - 1` conditions one variable
//! on all the others.

use alloc::format;
use alloc::vec::Vec;
use core::ops::RangeInclusive;

#[allow(unused_imports)]
use num_traits::Float;

use crate::copula::{Family, Generator, MixtureCopula};
use crate::{Error, PseudoSample, Result};

/// Minimum sample size for a single pairwise estimate.
pub const MIN_PAIRWISE_ROWS: usize = 20;
/// Minimum sample size for the percentile-median estimator.
pub const MIN_ROBUST_ROWS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TdKind {
    Parametric { n: usize, h: usize },
    Empirical { upper: RangeInclusive<u32>, lower: RangeInclusive<u32> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailDepEstimate {
    pub lower: f64,
    pub upper: f64,
    pub kind: TdKind,
    /// Set when some empirical estimate hit an empty joint tail.
    pub degenerate: bool,
}

fn check_split(n: usize, h: usize) -> Result<()> {
    if h == 0 || h >= n {
        return Err(Error::Domain(format!("tail dependence needs 1 <= h < n, got n={n}, h={h}")));
    }
    Ok(())
}

/// Lower coefficient `lim_{t->inf} psi(n t) / psi(h t)`.
pub fn archimedean_lower_td(g: &Generator, n: usize, h: usize) -> Result<f64> {
    check_split(n, h)?;
    let ratio = h as f64 / n as f64;
    Ok(match g.family() {
        Family::Clayton => ratio.powf(1.0 / g.theta()),
        Family::OpClayton => ratio.powf(1.0 / (g.beta() * g.theta())),
        Family::Gumbel | Family::Frank => 0.0,
    })
}

/// `sum_{i=1}^m (-1)^i C(m,i) i^a`.
fn alternating_power_sum(m: usize, a: f64) -> f64 {
    let mut binom = 1.0;
    let mut total = 0.0;
    for i in 1..=m {
        binom = binom * (m + 1 - i) as f64 / i as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * binom * (i as f64).powf(a);
    }
    total
}

/// Upper coefficient, the `t -> 0` limit of the ratio of joint survival
/// functions. With `1 - psi(t) ~ c t^a` the limit is a ratio of alternating
/// power sums; `a = 1` means the upper tail is asymptotically independent.
pub fn archimedean_upper_td(g: &Generator, n: usize, h: usize) -> Result<f64> {
    check_split(n, h)?;
    let a = match g.family() {
        Family::Gumbel => 1.0 / g.theta(),
        Family::OpClayton => 1.0 / g.beta(),
        Family::Clayton | Family::Frank => return Ok(0.0),
    };
    if a >= 1.0 {
        return Ok(0.0);
    }
    let v = alternating_power_sum(n, a) / alternating_power_sum(h, a);
    Ok(v.clamp(0.0, 1.0))
}

/// Weighted sum of component coefficients.
pub fn mixture_td(model: &MixtureCopula, n: usize, h: usize) -> Result<TailDepEstimate> {
    let mut lower = 0.0;
    let mut upper = 0.0;
    for (g, w) in model.components().iter().zip(model.weights()) {
        lower += w * archimedean_lower_td(g, n, h)?;
        upper += w * archimedean_upper_td(g, n, h)?;
    }
    Ok(TailDepEstimate {
        lower: lower.clamp(0.0, 1.0),
        upper: upper.clamp(0.0, 1.0),
        kind: TdKind::Parametric { n, h },
        degenerate: false,
    })
}

/// Average ranks (1-based) of `x`; tied values share the mean of their ranks.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = alloc::vec![0.0; x.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start;
        while end + 1 < idx.len() && x[idx[end + 1]] == x[idx[start]] {
            end += 1;
        }
        let r = (start + end + 2) as f64 / 2.0;
        for &i in &idx[start..=end] {
            ranks[i] = r;
        }
        start = end + 1;
    }
    ranks
}

/// Outcome of one pairwise estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseEstimate {
    pub value: f64,
    /// The empirical copula was zero at the evaluation point.
    pub degenerate: bool,
}

/// Rank-based upper estimator from precomputed ranks.
fn upper_from_ranks(r1: &[f64], r2: &[f64], k: usize) -> PairwiseEstimate {
    let n = r1.len();
    // rank / (n + 1) <= (n - k) / n, kept in integer-exact arithmetic
    let bound = ((n - k) * (n + 1)) as f64;
    let nf = n as f64;
    let count = r1.iter().zip(r2).filter(|(a, b)| **a * nf <= bound && **b * nf <= bound).count();
    if count == 0 {
        return PairwiseEstimate { value: 0.0, degenerate: true };
    }
    let c = count as f64 / nf;
    let q = (n - k) as f64 / nf;
    let value = 2.0 - (c.ln() / q.ln()).min(2.0);
    PairwiseEstimate { value: value.clamp(0.0, 1.0), degenerate: false }
}

fn check_pair(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Validation(format!("pair columns differ in length: {} vs {}", x.len(), y.len())));
    }
    if x.len() < min {
        return Err(Error::Precondition(format!("pairwise estimate needs at least {min} rows, got {}", x.len())));
    }
    Ok(())
}

fn two_columns(pseudo: &PseudoSample) -> Result<(Vec<f64>, Vec<f64>)> {
    if pseudo.dim() != 2 {
        return Err(Error::Validation(format!("pairwise estimate needs 2 columns, got {}", pseudo.dim())));
    }
    Ok((pseudo.column(0), pseudo.column(1)))
}

/// Pairwise upper estimator at rank offset `k` on two raw or pseudo columns.
pub fn pairwise_upper_td(x: &[f64], y: &[f64], k: usize) -> Result<PairwiseEstimate> {
    check_pair(x, y, MIN_PAIRWISE_ROWS)?;
    let n = x.len();
    if k == 0 || k >= n {
        return Err(Error::Domain(format!("rank offset must be in 1..={}, got {k}", n - 1)));
    }
    Ok(upper_from_ranks(&average_ranks(x), &average_ranks(y), k))
}

/// [`pairwise_upper_td`] on a two-column pseudo-sample.
pub fn empirical_pairwise_upper_td(pseudo: &PseudoSample, k: usize) -> Result<PairwiseEstimate> {
    let (x, y) = two_columns(pseudo)?;
    pairwise_upper_td(&x, &y, k)
}

/// Percentile settings of the robust estimator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PercentileConfig {
    pub upper: RangeInclusive<u32>,
    pub lower: RangeInclusive<u32>,
}

impl Default for PercentileConfig {
    fn default() -> Self {
        Self { upper: 1..=20, lower: 80..=99 }
    }
}

impl PercentileConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |r: &RangeInclusive<u32>| r.start() <= r.end() && *r.start() >= 1 && *r.end() <= 99;
        if !ok(&self.upper) || !ok(&self.lower) {
            return Err(Error::Parameter(format!(
                "percentile ranges must lie in 1..=99: upper {:?}, lower {:?}",
                self.upper, self.lower
            )));
        }
        Ok(())
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

fn median_over(r1: &[f64], r2: &[f64], ks: impl Iterator<Item = usize>) -> (f64, bool) {
    let mut degenerate = false;
    let mut vals: Vec<f64> = ks
        .map(|k| {
            let e = upper_from_ranks(r1, r2, k);
            degenerate |= e.degenerate;
            e.value
        })
        .collect();
    (median(&mut vals), degenerate)
}

fn offset(pct: u32, n: usize) -> usize {
    let k = libm::round(pct as f64 * n as f64 / 100.0) as usize;
    k.clamp(1, n - 1)
}

/// Percentile-median estimator on raw or pseudo columns.
///
/// The upper value is the median over `k` at the upper percentiles. The lower
/// value applies the upper estimator to the reflected ranks `n + 1 - R`, with
/// percentile `p` mapped to `k` at `100 - p`.
pub fn robust_td_columns(x: &[f64], y: &[f64], cfg: &PercentileConfig) -> Result<TailDepEstimate> {
    check_pair(x, y, MIN_ROBUST_ROWS)?;
    cfg.validate()?;
    let n = x.len();
    let r1 = average_ranks(x);
    let r2 = average_ranks(y);
    let (upper, du) = median_over(&r1, &r2, cfg.upper.clone().map(|p| offset(p, n)));
    let reflect = |r: &[f64]| r.iter().map(|v| (n + 1) as f64 - v).collect::<Vec<_>>();
    let (lower, dl) = median_over(&reflect(&r1), &reflect(&r2), cfg.lower.clone().map(|p| offset(100 - p, n)));
    Ok(TailDepEstimate {
        lower,
        upper,
        kind: TdKind::Empirical { upper: cfg.upper.clone(), lower: cfg.lower.clone() },
        degenerate: du || dl,
    })
}

/// [`robust_td_columns`] with the default percentile ranges on a pseudo-sample.
pub fn robust_pairwise_td(pseudo: &PseudoSample) -> Result<TailDepEstimate> {
    let (x, y) = two_columns(pseudo)?;
    robust_td_columns(&x, &y, &PercentileConfig::default())
}
