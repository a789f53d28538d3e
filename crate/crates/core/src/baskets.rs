//! Quintile baskets ranked by forward/spot ratio and the resulting carry returns.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::ingestion::{Currency, Date, PricePanel, ReturnPanel};
use crate::{Error, Result};

pub const DEFAULT_QUINTILES: usize = 5;
/// Trading days in one monthly holding period.
pub const MONTHLY_HORIZON: usize = 21;

/// Basket membership on one date. Basket 1 holds the highest forward/spot
/// ratios (investment currencies), the last basket the lowest (funding).
#[derive(Debug, Clone, PartialEq)]
pub struct BasketAssignment {
    pub date: Date,
    /// Every ranked currency with its 1-based basket index, best ratio first.
    pub members: Vec<(Currency, usize)>,
    pub investment: Vec<Currency>,
    pub funding: Vec<Currency>,
}

impl BasketAssignment {
    pub fn basket_of(&self, ccy: Currency) -> Option<usize> {
        self.members.iter().find(|(c, _)| *c == ccy).map(|(_, b)| *b)
    }

    pub fn basket_sizes(&self, baskets: usize) -> Vec<usize> {
        let mut sizes = alloc::vec![0; baskets];
        for (_, b) in &self.members {
            sizes[b - 1] += 1;
        }
        sizes
    }
}

/// Rank currencies by ratio (descending, ties by code) and cut into baskets.
///
/// The two extreme baskets get `floor(n / quintiles)` members each; the
/// remainder is dealt round-robin to the middle baskets.
pub fn build_baskets(
    date: Date,
    ratios: &BTreeMap<Currency, f64>,
    quintiles: usize,
) -> Result<BasketAssignment> {
    if quintiles < 3 {
        return Err(Error::Sizing(format!("need at least 3 baskets, got {quintiles}")));
    }
    let n = ratios.len();
    if n < quintiles {
        return Err(Error::Sizing(format!(
            "{n} currencies on {date} cannot fill {quintiles} baskets"
        )));
    }
    let mut ranked: Vec<(Currency, f64)> = ratios.iter().map(|(c, r)| (*c, *r)).collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));

    let base = n / quintiles;
    let rem = n - base * quintiles;
    let middle = quintiles - 2;
    let mut sizes = alloc::vec![base; quintiles];
    for i in 0..rem {
        sizes[1 + i % middle] += 1;
    }

    let mut members = Vec::with_capacity(n);
    let mut it = ranked.iter();
    for (b, &size) in sizes.iter().enumerate() {
        for (ccy, _) in it.by_ref().take(size) {
            members.push((*ccy, b + 1));
        }
    }
    let pick = |basket: usize| members.iter().filter(|m| m.1 == basket).map(|m| m.0).collect();
    let investment = pick(1);
    let funding = pick(quintiles);
    Ok(BasketAssignment { date, members, investment, funding })
}

/// Basket assignments for every panel date with at least `quintiles`
/// currencies defined. Other dates are skipped.
pub fn assign_all(panel: &PricePanel, quintiles: usize) -> Result<Vec<BasketAssignment>> {
    let mut out = Vec::new();
    for (t, date) in panel.dates().iter().enumerate() {
        let ratios = panel.ratios_at(t);
        if ratios.len() < quintiles {
            continue;
        }
        out.push(build_baskets(*date, &ratios, quintiles)?);
    }
    Ok(out)
}

/// High-minus-low carry portfolio returns at non-overlapping rebalance dates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CarrySeries {
    pub dates: Vec<Date>,
    pub long_leg: Vec<f64>,
    pub short_leg: Vec<f64>,
    pub hml: Vec<f64>,
}

fn leg_return(members: &[Currency], returns: &ReturnPanel, start: usize, end: usize) -> Option<f64> {
    let cums: Vec<f64> = members
        .iter()
        .filter_map(|ccy| returns.currency_index(*ccy))
        .filter_map(|c| returns.window(c, start, end))
        .map(|w| w.iter().sum::<f64>())
        .collect();
    if cums.is_empty() {
        None
    } else {
        Some(cums.iter().sum::<f64>() / cums.len() as f64)
    }
}

/// Equal-weight long investment / short funding returns held for `horizon`
/// trading days. Members missing any return in the holding period are dropped.
pub fn carry_returns(
    assignments: &[BasketAssignment],
    returns: &ReturnPanel,
    horizon: usize,
) -> Result<CarrySeries> {
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be at least one day".to_string()));
    }
    let rdates = returns.dates();
    let mut out = CarrySeries::default();
    let mut next_allowed: Option<Date> = None;
    for a in assignments {
        if next_allowed.is_some_and(|d| a.date < d) {
            continue;
        }
        // first return row strictly after the rebalance date
        let start = rdates.partition_point(|d| *d <= a.date);
        let end = start + horizon;
        if end > rdates.len() {
            break;
        }
        let long = leg_return(&a.investment, returns, start, end)
            .ok_or_else(|| Error::Evaluation(format!("investment basket empty on {}", a.date)))?;
        let short = leg_return(&a.funding, returns, start, end)
            .ok_or_else(|| Error::Evaluation(format!("funding basket empty on {}", a.date)))?;
        out.dates.push(a.date);
        out.long_leg.push(long);
        out.short_leg.push(short);
        out.hml.push(long - short);
        next_allowed = Some(rdates[end - 1]);
    }
    Ok(out)
}
