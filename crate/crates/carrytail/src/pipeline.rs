//! Full run: rolling analysis in parallel, then every bundle file written by
//! a single writer in date order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use carrytail_core::analytics::{
    exposure_adjusted_returns, regress_basket_td, regression_inputs, td_series, BasketTag, RollingAnalysis, Tail,
    WindowOutcome,
};
use carrytail_core::baskets::{assign_all, carry_returns, BasketAssignment, CarrySeries};
use carrytail_core::fitting::ModelFamily;
use carrytail_core::ingestion::{Currency, PricePanel};
use rayon::prelude::*;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::formats::{read_panel, read_price_csv, Table};
use crate::records::{kind_label, outcome_json, OlsRecord};

/// Build the filled panel named by the configuration.
pub fn load_panel(cfg: &RunConfig) -> Result<PricePanel> {
    if let Some(p) = &cfg.panel {
        return read_panel(p);
    }
    let (Some(spot), Some(fwd)) = (&cfg.spot, &cfg.forward) else {
        return Err(CliError::Config("no panel or price files configured".into()));
    };
    ingest(spot, fwd, &cfg.invert)
}

/// Read both price files, flip inverted quotes and fill gaps.
pub fn ingest(spot: &Path, forward: &Path, invert: &[String]) -> Result<PricePanel> {
    let codes = invert.iter().map(|c| c.parse()).collect::<carrytail_core::Result<Vec<Currency>>>()?;
    let mut s = read_price_csv(spot)?;
    let mut f = read_price_csv(forward)?;
    carrytail_core::ingestion::invert_quotes(&mut s, &codes);
    carrytail_core::ingestion::invert_quotes(&mut f, &codes);
    Ok(PricePanel::from_records(&s, &f)?.fill_forward())
}

/// Output directory that records a digest of every file it writes.
pub struct Bundle {
    dir: PathBuf,
    digests: BTreeMap<String, String>,
}

impl Bundle {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Bundle { dir: dir.to_path_buf(), digests: BTreeMap::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, body: &[u8]) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, body).map_err(|e| CliError::io(&p, e))?;
        self.record(name)
    }

    /// Register a file written through [`Bundle::path`].
    pub fn record(&mut self, name: &str) -> Result<()> {
        let p = self.path(name);
        let body = fs::read(&p).map_err(|e| CliError::io(&p, e))?;
        self.digests.insert(name.to_string(), format!("{:x}", Sha256::digest(&body)));
        Ok(())
    }

    /// Write `MANIFEST` with the completion state and one digest per file.
    pub fn finish(self, status: &str) -> Result<()> {
        let mut text = format!("status: {status}\n");
        for (name, digest) in &self.digests {
            let _ = writeln!(text, "sha256 {digest}  {name}");
        }
        let p = self.path("MANIFEST");
        fs::write(&p, text).map_err(|e| CliError::io(&p, e))
    }
}

/// Rolling analysis over `jobs` worker threads; output order is by date and
/// basket regardless of scheduling.
pub fn parallel_rolling(ra: &RollingAnalysis<'_>, jobs: Option<usize>) -> Result<Vec<WindowOutcome>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let days: Vec<usize> = ra.days().collect();
    let per_day: Vec<[WindowOutcome; 2]> = pool.install(|| days.par_iter().map(|&t| ra.evaluate(t)).collect());
    Ok(per_day.into_iter().flatten().collect())
}

/// What a finished run reports on stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub days: usize,
    pub skipped: usize,
    pub aic_table: String,
}

/// Execute the whole pipeline into `cfg.out`.
///
/// Files already written are kept when a later step fails; the manifest then
/// records the failure.
pub fn run(cfg: &RunConfig, jobs: Option<usize>) -> Result<RunSummary> {
    let mut bundle = Bundle::create(&cfg.out)?;
    match run_into(cfg, jobs, &mut bundle) {
        Ok(summary) => {
            bundle.finish("complete")?;
            Ok(summary)
        }
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            bundle.finish(&format!("incomplete ({msg})"))?;
            Err(e)
        }
    }
}

fn run_into(cfg: &RunConfig, jobs: Option<usize>, bundle: &mut Bundle) -> Result<RunSummary> {
    let mut copy = cfg.clone();
    copy.out = PathBuf::from(".");
    bundle.write("config.toml", copy.to_toml()?.as_bytes())?;

    let analysis = cfg.analysis()?;
    let panel = load_panel(cfg)?;
    let ra = RollingAnalysis::new(&panel, &analysis)?;
    let outcomes = parallel_rolling(&ra, jobs)?;

    let mut lines = String::new();
    for o in &outcomes {
        lines.push_str(&outcome_json(o).map_err(|e| CliError::Config(e.to_string()))?);
        lines.push('\n');
    }
    bundle.write("windows.jsonl", lines.as_bytes())?;
    write_td_series(bundle, &outcomes)?;
    write_pairwise(bundle, &outcomes)?;

    let assignments = assign_all(&panel, cfg.quintiles)?;
    write_baskets(bundle, &assignments)?;
    let carry = carry_returns(&assignments, ra.returns(), cfg.horizon)?;
    write_carry(bundle, &carry)?;

    let adjusted = exposure_adjusted_returns(
        &carry,
        &td_series(&outcomes, BasketTag::Investment),
        &td_series(&outcomes, BasketTag::Funding),
        cfg.direction()?,
        cfg.combine,
    );
    let mut t = Table::create(
        &bundle.path("adjusted_returns.csv"),
        &["date", "raw", "adj_high", "adj_low", "cum_raw", "cum_adj_high", "cum_adj_low", "missing_high", "missing_low"],
    )?;
    for i in 0..adjusted.dates.len() {
        t.row([
            adjusted.dates[i].to_string(),
            adjusted.raw[i].to_string(),
            adjusted.adj_high[i].to_string(),
            adjusted.adj_low[i].to_string(),
            adjusted.cum_raw[i].to_string(),
            adjusted.cum_adj_high[i].to_string(),
            adjusted.cum_adj_low[i].to_string(),
            u8::from(adjusted.missing_high[i]).to_string(),
            u8::from(adjusted.missing_low[i]).to_string(),
        ])?;
    }
    t.finish()?;
    bundle.record("adjusted_returns.csv")?;

    let mut regression = serde_json::Map::new();
    for basket in BasketTag::BOTH {
        let mut per_tail = serde_json::Map::new();
        for (tail, name) in [(Tail::Upper, "upper"), (Tail::Lower, "lower")] {
            let value = match regression_inputs(&outcomes, basket, tail)
                .and_then(|inp| regress_basket_td(&inp.y, &inp.regressors))
            {
                Ok(fit) => serde_json::to_value(OlsRecord::from(&fit)).map_err(|e| CliError::Config(e.to_string()))?,
                Err(e) => json!({ "error": e.to_string() }),
            };
            per_tail.insert(name.to_string(), value);
        }
        regression.insert(basket.name().to_string(), serde_json::Value::Object(per_tail));
    }
    let body = serde_json::to_string_pretty(&regression).map_err(|e| CliError::Config(e.to_string()))?;
    bundle.write("regression.json", body.as_bytes())?;

    let aic_table = aic_summary(&outcomes, &analysis.families);
    bundle.write("aic_summary.csv", aic_table.as_bytes())?;
    Ok(RunSummary {
        days: outcomes.len() / 2,
        skipped: outcomes.iter().filter(|o| o.result().is_none()).count(),
        aic_table,
    })
}

fn write_td_series(bundle: &mut Bundle, outcomes: &[WindowOutcome]) -> Result<()> {
    let mut t = Table::create(&bundle.path("td_series.csv"), &["date", "basket", "kind", "lower", "upper"])?;
    for r in outcomes.iter().filter_map(WindowOutcome::result) {
        if let Some(td) = &r.parametric {
            t.row([
                r.end.to_string(),
                r.basket.name().to_string(),
                kind_label(&td.kind, r.selected),
                td.lower.to_string(),
                td.upper.to_string(),
            ])?;
        }
    }
    t.finish()?;
    bundle.record("td_series.csv")
}

fn write_pairwise(bundle: &mut Bundle, outcomes: &[WindowOutcome]) -> Result<()> {
    let mut t = Table::create(&bundle.path("pairwise.csv"), &["date", "ccy_i", "ccy_j", "lower", "upper"])?;
    for r in outcomes.iter().filter_map(WindowOutcome::result) {
        for p in &r.pairwise {
            t.row([
                r.end.to_string(),
                p.first.to_string(),
                p.second.to_string(),
                p.td.lower.to_string(),
                p.td.upper.to_string(),
            ])?;
        }
    }
    t.finish()?;
    bundle.record("pairwise.csv")
}

pub fn write_baskets_csv(path: &Path, assignments: &[BasketAssignment]) -> Result<()> {
    let mut t = Table::create(path, &["date", "currency", "basket_index"])?;
    for a in assignments {
        for (ccy, b) in &a.members {
            t.row([a.date.to_string(), ccy.to_string(), b.to_string()])?;
        }
    }
    t.finish()
}

fn write_baskets(bundle: &mut Bundle, assignments: &[BasketAssignment]) -> Result<()> {
    write_baskets_csv(&bundle.path("baskets.csv"), assignments)?;
    bundle.record("baskets.csv")
}

pub fn write_carry_csv(path: &Path, carry: &CarrySeries) -> Result<()> {
    let mut t = Table::create(path, &["date", "long", "short", "hml"])?;
    for i in 0..carry.dates.len() {
        t.row([
            carry.dates[i].to_string(),
            carry.long_leg[i].to_string(),
            carry.short_leg[i].to_string(),
            carry.hml[i].to_string(),
        ])?;
    }
    t.finish()
}

fn write_carry(bundle: &mut Bundle, carry: &CarrySeries) -> Result<()> {
    write_carry_csv(&bundle.path("carry.csv"), carry)?;
    bundle.record("carry.csv")
}

/// Mean AIC and selection counts per basket and family, as CSV text.
pub fn aic_summary(outcomes: &[WindowOutcome], families: &[ModelFamily]) -> String {
    let mut text = String::from("basket,family,windows,mean_aic,selected\n");
    for basket in BasketTag::BOTH {
        let results: Vec<_> = outcomes.iter().filter_map(WindowOutcome::result).filter(|r| r.basket == basket).collect();
        for &family in families {
            let aics: Vec<f64> =
                results.iter().filter_map(|r| r.fits.iter().find(|f| f.family == family)).map(|f| f.aic).collect();
            let mean = if aics.is_empty() { f64::NAN } else { aics.iter().sum::<f64>() / aics.len() as f64 };
            let selected = results.iter().filter(|r| r.selected == Some(family)).count();
            let _ = writeln!(text, "{basket},{family},{},{mean},{selected}", aics.len());
        }
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_digests() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = Bundle::create(dir.path()).unwrap();
        b.write("b.txt", b"abc").unwrap();
        b.write("a.txt", b"").unwrap();
        b.finish("complete").unwrap();
        let m = fs::read_to_string(dir.path().join("MANIFEST")).unwrap();
        assert_eq!(
            m,
            "status: complete\n\
             sha256 e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855  a.txt\n\
             sha256 ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad  b.txt\n"
        );
    }
}
