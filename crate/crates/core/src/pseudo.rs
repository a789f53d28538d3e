use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// How a pseudo-observation column was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginSource {
    Lggd,
    Garch11,
    Ranks,
    Simulated,
    /// Read from a file; provenance unknown.
    External,
}

/// `n x d` observations strictly inside the unit hypercube, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoSample {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
    sources: Vec<MarginSource>,
}

impl PseudoSample {
    pub fn new(data: Vec<f64>, dim: usize, sources: Vec<MarginSource>) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::Validation(format!("{} values do not fill rows of {dim}", data.len())));
        }
        if sources.len() != dim {
            return Err(Error::Validation("one margin source per column is required".into()));
        }
        if let Some(i) = data.iter().position(|v| !(*v > 0.0 && *v < 1.0)) {
            return Err(Error::Domain(format!(
                "pseudo-observation {} at row {} is outside (0, 1)",
                data[i],
                i / dim
            )));
        }
        Ok(Self { rows: data.len() / dim, dim, data, sources })
    }

    /// Build from rows that all share one margin source.
    pub fn from_rows(rows: &[Vec<f64>], source: MarginSource) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Validation("ragged pseudo-sample rows".into()));
        }
        Self::new(rows.concat(), dim, alloc::vec![source; dim])
    }

    /// Build from columns with per-column sources.
    pub fn from_columns(cols: &[Vec<f64>], sources: Vec<MarginSource>) -> Result<Self> {
        let n = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != n) {
            return Err(Error::Validation("columns differ in length".into()));
        }
        let mut data = Vec::with_capacity(n * cols.len());
        for i in 0..n {
            data.extend(cols.iter().map(|c| c[i]));
        }
        Self::new(data, cols.len(), sources)
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sources(&self) -> &[MarginSource] {
        &self.sources
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Keep only the listed columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        let columns: Vec<Vec<f64>> = cols.iter().map(|&j| self.column(j)).collect();
        Self::from_columns(&columns, cols.iter().map(|&j| self.sources[j]).collect())
    }
}
