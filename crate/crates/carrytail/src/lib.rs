//! File formats, the parallel rolling driver and the `carrytail` command
//! line on top of [`carrytail_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;
pub mod records;

pub use error::{CliError, Result};
