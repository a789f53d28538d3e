//! Tail-risk analytics for currency carry-trade baskets.
//!
//! The crate covers the whole numerical pipeline: forward/spot panels and
//! quintile baskets, heavy-tailed marginal fits (log-generalized-gamma and
//! GARCH(1,1)), Archimedean mixture copulas with exact high-order generator
//! derivatives, two-stage maximum likelihood, closed-form and empirical tail
//! dependence, and exposure-adjusted carry returns.
//!
//! It is `no_std` and only needs `alloc`. File formats, the command-line
//! front end and parallel drivers live in the `carrytail` crate.

#![no_std]
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytics;
pub mod baskets;
pub mod copula;
mod error;
mod pseudo;
pub mod fitting;
pub mod ingestion;
pub mod marginals;
pub mod optim;
pub mod rng;
pub mod special;
pub mod synthetic;
pub mod taildep;

pub use error::{Error, Result};
pub use pseudo::{MarginSource, PseudoSample};
