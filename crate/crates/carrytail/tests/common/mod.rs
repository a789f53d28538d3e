#![allow(dead_code)]

use std::path::PathBuf;

use carrytail_core::copula::{Generator, MixtureCopula};
use carrytail_core::ingestion::{Date, PricePanel};
use carrytail_core::synthetic::SyntheticPanel;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

/// The panel behind `fixtures/spot.csv` and `fixtures/forward.csv`.
pub fn fixture_panel() -> PricePanel {
    SyntheticPanel {
        n_dates: 300,
        n_currencies: 15,
        start: Date::from_ymd_opt(2012, 1, 2).unwrap(),
        investment_copula: MixtureCopula::single(Generator::gumbel(2.0).unwrap(), 3).unwrap(),
        return_scale: 0.004,
        seed: 20_120_102,
    }
    .generate()
    .unwrap()
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_carrytail"))
}
