//! Daily spot and one-month forward quotes, aligned on a common calendar.
//!
//! Quotes are USD per one unit of foreign currency. Sources quoted the other
//! way are flipped with [`invert_quotes`] before the panel is built.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

pub type Date = chrono::NaiveDate;

/// ISO-4217 currency code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Currency([u8; 3]);

impl Currency {
    pub fn as_str(&self) -> &str {
        // constructed from ASCII uppercase only
        core::str::from_utf8(&self.0).unwrap_or("???")
    }
}

impl FromStr for Currency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let b = s.as_bytes();
        if b.len() != 3 || !b.iter().all(u8::is_ascii_uppercase) {
            return Err(Error::Validation(format!("invalid currency code {s:?}")));
        }
        Ok(Currency([b[0], b[1], b[2]]))
    }
}

impl fmt::Display for Currency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One `date,currency,price` row with its source line for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceRecord {
    pub line: usize,
    pub date: Date,
    pub currency: Currency,
    pub price: f64,
}

/// Replace `p` by `1/p` for every record whose currency is in `codes`.
pub fn invert_quotes(records: &mut [PriceRecord], codes: &[Currency]) {
    for r in records.iter_mut().filter(|r| codes.contains(&r.currency)) {
        r.price = 1.0 / r.price;
    }
}

/// Date x currency panel of spot and one-month forward quotes.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    dates: Vec<Date>,
    currencies: Vec<Currency>,
    spot: Vec<Option<f64>>,
    forward: Vec<Option<f64>>,
    available: Vec<bool>,
}

fn check_quote(v: Option<f64>, what: &str, date: Date, ccy: Currency) -> Result<()> {
    match v {
        Some(p) if !(p.is_finite() && p > 0.0) => Err(Error::Validation(format!(
            "{what} quote {p} for {ccy} on {date} is not a positive finite number"
        ))),
        _ => Ok(()),
    }
}

impl PricePanel {
    /// Build a panel from dense row-major matrices (`dates.len() x currencies.len()`).
    ///
    /// A cell counts as originally available when both quotes are present.
    pub fn new(
        dates: Vec<Date>,
        currencies: Vec<Currency>,
        spot: Vec<Option<f64>>,
        forward: Vec<Option<f64>>,
    ) -> Result<Self> {
        let cells = dates.len() * currencies.len();
        if spot.len() != cells || forward.len() != cells {
            return Err(Error::Validation(format!(
                "expected {cells} cells, got spot {} and forward {}",
                spot.len(),
                forward.len()
            )));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("dates must be strictly increasing".to_string()));
        }
        let unique: BTreeSet<_> = currencies.iter().collect();
        if unique.len() != currencies.len() {
            return Err(Error::Validation("duplicate currency column".to_string()));
        }
        let nc = currencies.len();
        for (i, (s, f)) in spot.iter().zip(&forward).enumerate() {
            let (t, c) = (i / nc, i % nc);
            check_quote(*s, "spot", dates[t], currencies[c])?;
            check_quote(*f, "forward", dates[t], currencies[c])?;
        }
        let available = spot
            .iter()
            .zip(&forward)
            .map(|(s, f)| s.is_some() && f.is_some())
            .collect();
        Ok(Self { dates, currencies, spot, forward, available })
    }

    /// Like [`PricePanel::new`] but with explicit availability flags, for
    /// panels that were already filled.
    pub fn with_availability(
        dates: Vec<Date>,
        currencies: Vec<Currency>,
        spot: Vec<Option<f64>>,
        forward: Vec<Option<f64>>,
        available: Vec<bool>,
    ) -> Result<Self> {
        let mut panel = Self::new(dates, currencies, spot, forward)?;
        if available.len() != panel.available.len() {
            return Err(Error::Validation("availability matrix has the wrong shape".to_string()));
        }
        if available.iter().zip(&panel.available).any(|(a, defined)| *a && !defined) {
            return Err(Error::Validation("a cell marked available has no quotes".to_string()));
        }
        panel.available = available;
        Ok(panel)
    }

    /// Align spot and forward records on the union of their dates.
    pub fn from_records(spot: &[PriceRecord], forward: &[PriceRecord]) -> Result<Self> {
        let mut dates = BTreeSet::new();
        let mut ccys = BTreeSet::new();
        for r in spot.iter().chain(forward) {
            dates.insert(r.date);
            ccys.insert(r.currency);
        }
        let dates: Vec<Date> = dates.into_iter().collect();
        let currencies: Vec<Currency> = ccys.into_iter().collect();
        let date_idx: BTreeMap<Date, usize> = dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
        let ccy_idx: BTreeMap<Currency, usize> =
            currencies.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let nc = currencies.len();

        let place = |records: &[PriceRecord], what: &str| -> Result<Vec<Option<f64>>> {
            let mut cells = vec![None; dates.len() * nc];
            for r in records {
                if !(r.price.is_finite() && r.price > 0.0) {
                    return Err(Error::Validation(format!(
                        "line {}: {what} price {} must be positive",
                        r.line, r.price
                    )));
                }
                let cell = &mut cells[date_idx[&r.date] * nc + ccy_idx[&r.currency]];
                if cell.is_some() {
                    return Err(Error::Validation(format!(
                        "line {}: duplicate {what} quote for ({}, {})",
                        r.line, r.date, r.currency
                    )));
                }
                *cell = Some(r.price);
            }
            Ok(cells)
        };
        let spot_cells = place(spot, "spot")?;
        let fwd_cells = place(forward, "forward")?;
        Self::new(dates, currencies, spot_cells, fwd_cells)
    }

    pub fn dates(&self) -> &[Date] {
        &self.dates
    }

    pub fn currencies(&self) -> &[Currency] {
        &self.currencies
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_currencies(&self) -> usize {
        self.currencies.len()
    }

    pub fn date_index(&self, date: Date) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    pub fn currency_index(&self, ccy: Currency) -> Option<usize> {
        self.currencies.iter().position(|c| *c == ccy)
    }

    fn cell(&self, t: usize, c: usize) -> usize {
        t * self.currencies.len() + c
    }

    pub fn spot(&self, t: usize, c: usize) -> Option<f64> {
        self.spot[self.cell(t, c)]
    }

    pub fn forward(&self, t: usize, c: usize) -> Option<f64> {
        self.forward[self.cell(t, c)]
    }

    /// Whether the cell was present in the source data (before filling).
    pub fn is_available(&self, t: usize, c: usize) -> bool {
        self.available[self.cell(t, c)]
    }

    /// Whether both quotes are defined, either observed or filled.
    pub fn is_defined(&self, t: usize, c: usize) -> bool {
        self.spot(t, c).is_some() && self.forward(t, c).is_some()
    }

    /// Number of cells defined only through filling.
    pub fn filled_cells(&self) -> usize {
        (0..self.available.len())
            .filter(|&i| !self.available[i] && self.spot[i].is_some() && self.forward[i].is_some())
            .count()
    }

    /// Carry the last observed quote forward over gaps.
    ///
    /// Cells before a currency's first observation stay empty.
    pub fn fill_forward(&self) -> PricePanel {
        let mut out = self.clone();
        let nc = self.currencies.len();
        for c in 0..nc {
            let mut last_s = None;
            let mut last_f = None;
            for t in 0..self.dates.len() {
                let i = t * nc + c;
                match out.spot[i] {
                    Some(v) => last_s = Some(v),
                    None => out.spot[i] = last_s,
                }
                match out.forward[i] {
                    Some(v) => last_f = Some(v),
                    None => out.forward[i] = last_f,
                }
            }
        }
        out
    }

    /// Forward/spot ratio of every currency defined on `date`.
    pub fn forward_spot_ratio(&self, date: Date) -> Result<BTreeMap<Currency, f64>> {
        let t = self
            .date_index(date)
            .ok_or_else(|| Error::Lookup(format!("date {date} not in panel")))?;
        Ok(self.ratios_at(t))
    }

    pub(crate) fn ratios_at(&self, t: usize) -> BTreeMap<Currency, f64> {
        self.currencies
            .iter()
            .enumerate()
            .filter_map(|(c, ccy)| match (self.forward(t, c), self.spot(t, c)) {
                (Some(f), Some(s)) => Some((*ccy, f / s)),
                _ => None,
            })
            .collect()
    }

    /// Log returns of the one-month forward quotes.
    pub fn log_returns(&self) -> ReturnPanel {
        let nc = self.currencies.len();
        let rows = self.dates.len().saturating_sub(1);
        let mut returns = Vec::with_capacity(rows * nc);
        for t in 1..self.dates.len() {
            for c in 0..nc {
                returns.push(match (self.forward(t - 1, c), self.forward(t, c)) {
                    (Some(a), Some(b)) => Some(b.ln() - a.ln()),
                    _ => None,
                });
            }
        }
        ReturnPanel {
            dates: self.dates.iter().skip(1).copied().collect(),
            currencies: self.currencies.clone(),
            returns,
        }
    }
}

/// Daily log returns; row `t` is the move from panel date `t` to `t + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    dates: Vec<Date>,
    currencies: Vec<Currency>,
    returns: Vec<Option<f64>>,
}

impl ReturnPanel {
    pub fn new(dates: Vec<Date>, currencies: Vec<Currency>, returns: Vec<Option<f64>>) -> Result<Self> {
        if returns.len() != dates.len() * currencies.len() {
            return Err(Error::Validation("return matrix has the wrong shape".to_string()));
        }
        if returns.iter().flatten().any(|r| !r.is_finite()) {
            return Err(Error::Validation("returns must be finite".to_string()));
        }
        Ok(Self { dates, currencies, returns })
    }

    pub fn dates(&self) -> &[Date] {
        &self.dates
    }

    pub fn currencies(&self) -> &[Currency] {
        &self.currencies
    }

    pub fn currency_index(&self, ccy: Currency) -> Option<usize> {
        self.currencies.iter().position(|c| *c == ccy)
    }

    pub fn get(&self, t: usize, c: usize) -> Option<f64> {
        self.returns[t * self.currencies.len() + c]
    }

    /// Column `c` over rows `start..end`, or `None` if any value is missing.
    pub fn window(&self, c: usize, start: usize, end: usize) -> Option<Vec<f64>> {
        (start..end).map(|t| self.get(t, c)).collect()
    }
}
