//! Seeded synthetic forward/spot panels with known basket dependence.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::copula::{sample_copula, MixtureCopula};
use crate::ingestion::{Currency, Date, PricePanel};
use crate::rng::substream;
use crate::{Error, Result};

/// Layout of a synthetic panel.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPanel {
    pub n_dates: usize,
    pub n_currencies: usize,
    pub start: Date,
    /// Dependence among the highest-carry currencies; the rest are independent.
    pub investment_copula: MixtureCopula,
    /// Scale of the logistic daily log returns.
    pub return_scale: f64,
    pub seed: u64,
}

/// Codes `AAA`, `AAB`, ... in ascending order.
pub fn synthetic_codes(n: usize) -> Vec<Currency> {
    (0..n)
        .map(|i| {
            let s = [b'A' + (i / 676 % 26) as u8, b'A' + (i / 26 % 26) as u8, b'A' + (i % 26) as u8];
            core::str::from_utf8(&s).ok().and_then(|s| s.parse().ok()).expect("letters form a code")
        })
        .collect()
}

/// Weekdays from `start` onwards.
pub fn business_days(start: Date, n: usize) -> Vec<Date> {
    use chrono::Datelike;
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if d.weekday().number_from_monday() <= 5 {
            out.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    out
}

impl SyntheticPanel {
    /// Forward/spot ratios decrease with the currency index, so the first
    /// `copula.dim()` codes form the investment basket on every date.
    pub fn generate(&self) -> Result<PricePanel> {
        let d = self.investment_copula.dim();
        if self.n_currencies < d || self.n_currencies < 3 {
            return Err(Error::Sizing(format!("{} currencies cannot hold a basket of {d}", self.n_currencies)));
        }
        if self.n_dates < 2 {
            return Err(Error::Sizing("a panel needs at least two dates".into()));
        }
        let codes = synthetic_codes(self.n_currencies);
        let dates = business_days(self.start, self.n_dates);
        let steps = self.n_dates - 1;
        let joint = sample_copula(&self.investment_copula, steps, &mut substream(self.seed, "synthetic-joint"));
        let mut rng = substream(self.seed, "synthetic-independent");
        let nc = self.n_currencies;
        let logistic = |u: f64| self.return_scale * (u / (1.0 - u)).ln();

        let mut log_fwd: Vec<f64> = (0..nc).map(|c| (1.0 + 0.01 * c as f64).ln()).collect();
        let mut spot = Vec::with_capacity(self.n_dates * nc);
        let mut forward = Vec::with_capacity(self.n_dates * nc);
        for t in 0..self.n_dates {
            if t > 0 {
                let row = joint.row(t - 1);
                for (c, lf) in log_fwd.iter_mut().enumerate() {
                    let u = if c < d { row[c] } else { rng.random_range(1e-12..1.0 - 1e-12) };
                    *lf += logistic(u);
                }
            }
            for (c, lf) in log_fwd.iter().enumerate() {
                let ratio = 1.0 + 0.002 * (nc - c) as f64;
                let f = lf.exp();
                forward.push(Some(f));
                spot.push(Some(f / ratio));
            }
        }
        PricePanel::new(dates, codes, spot, forward)
    }
}
