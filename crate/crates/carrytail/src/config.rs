//! Run configuration file (TOML).
//!
//! ```toml
//! panel = "panel.csv"          # or spot = "...", forward = "..."
//! window = 126
//! margin = "lggd"              # or "garch11"
//! families = ["cfg", "cg", "opc"]
//! quintiles = 5
//! horizon = 21
//! seed = 7
//! out = "out"
//! upper_percentiles = [1, 20]
//! lower_percentiles = [80, 99]
//! direction = "downside"       # or "upside"
//! combine = false
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::path::{Path, PathBuf};

use carrytail_core::analytics::{AnalysisConfig, Direction, MarginModel};
use carrytail_core::fitting::{FitOptions, ModelFamily};
use carrytail_core::marginals::default_k_grid;
use carrytail_core::taildep::PercentileConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const STANDARD_WINDOWS: [usize; 2] = [126, 252];

fn default_window() -> usize {
    126
}
fn default_margin() -> String {
    "lggd".into()
}
fn default_families() -> Vec<String> {
    ModelFamily::ALL.iter().map(|f| f.name().to_string()).collect()
}
fn default_quintiles() -> usize {
    carrytail_core::baskets::DEFAULT_QUINTILES
}
fn default_horizon() -> usize {
    carrytail_core::baskets::MONTHLY_HORIZON
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_upper() -> [u32; 2] {
    [1, 20]
}
fn default_lower() -> [u32; 2] {
    [80, 99]
}
fn default_direction() -> String {
    "downside".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub panel: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spot: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward: Option<PathBuf>,
    /// Currencies quoted as units per USD in the raw files.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub invert: Vec<String>,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default)]
    pub allow_any_window: bool,
    #[serde(default = "default_margin")]
    pub margin: String,
    #[serde(default = "default_families")]
    pub families: Vec<String>,
    #[serde(default = "default_quintiles")]
    pub quintiles: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub td_h: Option<usize>,
    #[serde(default = "default_upper")]
    pub upper_percentiles: [u32; 2],
    #[serde(default = "default_lower")]
    pub lower_percentiles: [u32; 2],
    #[serde(default = "default_direction")]
    pub direction: String,
    #[serde(default)]
    pub combine: bool,
    #[serde(default)]
    pub aic_free_weights: bool,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Read, apply overrides, resolve paths and validate.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        cfg.apply(overrides);
        cfg.resolve(path.parent().unwrap_or(Path::new(".")));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(seed) = o.seed {
            self.seed = Some(seed);
        }
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.panel, &mut self.spot, &mut self.forward].into_iter().flatten() {
            fix(p);
        }
        fix(&mut self.out);
    }

    /// Field checks plus existence of every input path.
    pub fn validate(&self) -> Result<()> {
        if !self.allow_any_window && !STANDARD_WINDOWS.contains(&self.window) {
            return Err(CliError::Config(format!(
                "window must be 126 or 252 (set allow_any_window = true to override), got {}",
                self.window
            )));
        }
        if self.seed.is_none() {
            return Err(CliError::Config("seed is required (config `seed` or --seed)".into()));
        }
        self.analysis()?;
        self.direction()?;
        match (&self.panel, &self.spot, &self.forward) {
            (Some(p), None, None) => exists(p)?,
            (None, Some(s), Some(f)) => {
                exists(s)?;
                exists(f)?;
            }
            _ => return Err(CliError::Config("give either `panel` or both `spot` and `forward`".into())),
        }
        for code in &self.invert {
            code.parse::<carrytail_core::ingestion::Currency>()?;
        }
        Ok(())
    }

    pub fn direction(&self) -> Result<Direction> {
        Ok(self.direction.parse()?)
    }

    pub fn analysis(&self) -> Result<AnalysisConfig> {
        let families = self.families.iter().map(|f| f.parse()).collect::<carrytail_core::Result<Vec<ModelFamily>>>()?;
        let margin: MarginModel = self.margin.parse()?;
        let seed = self.seed.unwrap_or_default();
        let cfg = AnalysisConfig {
            window: self.window,
            margin,
            families,
            quintiles: self.quintiles,
            td_h: self.td_h,
            percentiles: PercentileConfig {
                upper: self.upper_percentiles[0]..=self.upper_percentiles[1],
                lower: self.lower_percentiles[0]..=self.lower_percentiles[1],
            },
            fit: FitOptions { aic_free_weights: self.aic_free_weights, seed, ..FitOptions::default() },
            k_grid: default_k_grid(),
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }
}

fn exists(p: &Path) -> Result<()> {
    std::fs::metadata(p).map(|_| ()).map_err(|e| CliError::io(p, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let mut cfg = RunConfig::parse("panel = \"p.csv\"\nseed = 3\n").unwrap();
        assert_eq!(cfg.window, 126);
        assert_eq!(cfg.families, vec!["cfg", "cg", "opc"]);
        assert_eq!(cfg.upper_percentiles, [1, 20]);
        cfg.apply(&Overrides { out: Some("elsewhere".into()), seed: Some(9) });
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.out, PathBuf::from("elsewhere"));
        cfg.resolve(Path::new("/data"));
        assert_eq!(cfg.panel, Some(PathBuf::from("/data/p.csv")));
        let a = cfg.analysis().unwrap();
        assert_eq!(a.fit.seed, 9);
    }

    #[test]
    fn validation() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("p.csv"), "").unwrap();
        let load = |body: &str| {
            let p = dir.path().join("run.toml");
            std::fs::write(&p, body).unwrap();
            RunConfig::load(&p, &Overrides::default())
        };
        assert!(load("panel = \"p.csv\"\nseed = 1\n").is_ok());
        let e = load("panel = \"p.csv\"\n").unwrap_err();
        assert!(e.to_string().contains("seed is required"));
        assert!(load("panel = \"p.csv\"\nseed = 1\nwindow = 200\n").is_err());
        assert!(load("panel = \"p.csv\"\nseed = 1\nwindow = 200\nallow_any_window = true\n").is_ok());
        assert!(load("panel = \"p.csv\"\nseed = 1\nfamilies = [\"t\"]\n").is_err());
        assert!(load("panel = \"p.csv\"\nseed = 1\nbogus = 1\n").is_err());
        assert_eq!(load("panel = \"nope.csv\"\nseed = 1\n").unwrap_err().exit_code(), 2);
        assert_eq!(load("seed = 1\n").unwrap_err().exit_code(), 3);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::parse("panel = \"p.csv\"\nseed = 3\ntd_h = 1\ninvert = [\"JPY\"]\n").unwrap();
        assert_eq!(RunConfig::parse(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }
}
