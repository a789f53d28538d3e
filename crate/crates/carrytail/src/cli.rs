//! Command-line surface.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use carrytail_core::analytics::MarginModel;
use carrytail_core::baskets::{assign_all, carry_returns};
use carrytail_core::copula::{sample_copula, Family, Generator, MixtureCopula};
use carrytail_core::fitting::{fit_mixture_mle, select_model, FitOptions, ModelFamily};
use carrytail_core::ingestion::Date;
use carrytail_core::marginals::default_k_grid;
use carrytail_core::rng::substream;
use carrytail_core::taildep::{mixture_td, robust_td_columns, PercentileConfig};
use clap::{Args, Parser, Subcommand};

use crate::config::{Overrides, RunConfig};
use crate::error::{CliError, Result};
use crate::formats::{read_pseudo_csv, write_panel, write_pseudo_csv, Table};
use crate::pipeline::{self, load_panel, write_baskets_csv, write_carry_csv};
use crate::records::{FitRecord, MarginRecord, ModelRecord, TdRecord};

#[derive(Debug, Parser)]
#[command(name = "carrytail", version, about = "Tail-dependence analytics for currency carry baskets")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for window evaluation (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Top-level random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate price files and write the filled panel.
    Ingest(IngestArgs),
    /// Quintile baskets and carry returns.
    Baskets(PanelArgs),
    /// Fit marginal models over one window.
    FitMargins(MarginArgs),
    /// Fit copula families to a pseudo-sample.
    FitCopula(CopulaArgs),
    /// Pairwise or model tail dependence.
    Taildep(TaildepArgs),
    /// Full rolling pipeline into an output bundle.
    Run,
    /// Draw a pseudo-sample from a copula.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub spot: PathBuf,
    #[arg(long)]
    pub forward: PathBuf,
    /// Currencies quoted as units per USD.
    #[arg(long, value_delimiter = ',')]
    pub invert: Vec<String>,
}

#[derive(Debug, Args)]
pub struct PanelArgs {
    /// Ingested panel (defaults to the configured inputs).
    #[arg(long)]
    pub panel: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub quintiles: usize,
    #[arg(long, default_value_t = 21)]
    pub horizon: usize,
}

#[derive(Debug, Args)]
pub struct MarginArgs {
    #[arg(long)]
    pub panel: Option<PathBuf>,
    #[arg(long, default_value = "lggd")]
    pub model: String,
    #[arg(long, default_value_t = 126)]
    pub window: usize,
    /// Last return date of the window (default: latest).
    #[arg(long)]
    pub end: Option<String>,
}

#[derive(Debug, Args)]
pub struct CopulaArgs {
    /// Headed CSV of pseudo-observations.
    #[arg(long)]
    pub pseudo: PathBuf,
    /// cfg, cg, opc or all.
    #[arg(long, default_value = "all")]
    pub family: String,
    #[arg(long)]
    pub aic_free_weights: bool,
}

#[derive(Debug, Args)]
pub struct TaildepArgs {
    /// Pseudo-sample for robust pairwise estimates.
    #[arg(long)]
    pub pseudo: Option<PathBuf>,
    /// Model JSON for closed-form coefficients.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Conditioning-set size (default: dimension - 1).
    #[arg(long)]
    pub h: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// clayton, gumbel, frank or op_clayton.
    #[arg(long)]
    pub family: String,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Output file (default: <out>/simulated.csv).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl Cli {
    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    fn overrides(&self) -> Overrides {
        Overrides { out: self.out.clone(), seed: self.seed }
    }

    fn run_config(&self) -> Result<RunConfig> {
        let path = self.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
        RunConfig::load(path, &self.overrides())
    }

    fn panel(&self, explicit: &Option<PathBuf>) -> Result<carrytail_core::ingestion::PricePanel> {
        match explicit {
            Some(p) => crate::formats::read_panel(p),
            None => load_panel(&self.run_config()?),
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn json<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| CliError::Config(e.to_string()))
}

/// Run one command; the returned text goes to stdout.
pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Ingest(a) => ingest(cli, a),
        Command::Baskets(a) => baskets(cli, a),
        Command::FitMargins(a) => fit_margins(cli, a),
        Command::FitCopula(a) => fit_copula(cli, a),
        Command::Taildep(a) => taildep(cli, a),
        Command::Run => run(cli),
        Command::Simulate(a) => simulate(cli, a),
    }
}

fn ingest(cli: &Cli, a: &IngestArgs) -> Result<String> {
    let panel = pipeline::ingest(&a.spot, &a.forward, &a.invert)?;
    let out = cli.out_dir();
    create_dir(&out)?;
    let path = out.join("panel.csv");
    write_panel(&path, &panel)?;
    let span = match (panel.dates().first(), panel.dates().last()) {
        (Some(a), Some(b)) => format!("{a} .. {b}"),
        _ => "empty".into(),
    };
    let codes: Vec<&str> = panel.currencies().iter().map(|c| c.as_str()).collect();
    Ok(format!(
        "panel: {}\ncurrencies ({}): {}\ndates: {} ({span})\nfilled cells: {}\n",
        path.display(),
        codes.len(),
        codes.join(" "),
        panel.n_dates(),
        panel.filled_cells()
    ))
}

fn baskets(cli: &Cli, a: &PanelArgs) -> Result<String> {
    let panel = cli.panel(&a.panel)?;
    let assignments = assign_all(&panel, a.quintiles)?;
    let carry = carry_returns(&assignments, &panel.log_returns(), a.horizon)?;
    let out = cli.out_dir();
    create_dir(&out)?;
    write_baskets_csv(&out.join("baskets.csv"), &assignments)?;
    write_carry_csv(&out.join("carry.csv"), &carry)?;
    let total: f64 = carry.hml.iter().sum();
    Ok(format!("{} basket dates, {} holding periods, cumulative hml {total}\n", assignments.len(), carry.dates.len()))
}

fn fit_margins(cli: &Cli, a: &MarginArgs) -> Result<String> {
    let model: MarginModel = a.model.parse()?;
    let panel = cli.panel(&a.panel)?;
    let returns = panel.log_returns();
    let dates = returns.dates();
    let end = match &a.end {
        Some(raw) => {
            let d: Date = raw.parse().map_err(|e| CliError::Config(format!("--end {raw:?}: {e}")))?;
            dates
            .iter()
            .position(|x| *x == d)
                .ok_or_else(|| carrytail_core::Error::Lookup(format!("no return on {d}")))?
        }
        None => dates.len().checked_sub(1).ok_or_else(|| carrytail_core::Error::Sizing("panel has no returns".into()))?,
    };
    if end + 1 < a.window {
        return Err(carrytail_core::Error::Sizing(format!("window of {} does not fit before {}", a.window, dates[end])).into());
    }
    let start = end + 1 - a.window;
    let grid = default_k_grid();
    let mut lines = String::new();
    let mut summary = String::new();
    for (c, ccy) in returns.currencies().iter().enumerate() {
        let Some(x) = returns.window(c, start, end + 1) else {
            let _ = writeln!(summary, "{ccy}: incomplete window, skipped");
            continue;
        };
        match model.fit(&x, &grid) {
            Ok(fit) => {
                let rec = MarginRecord::new(ccy.as_str(), &dates[start].to_string(), &dates[end].to_string(), &fit);
                let _ = writeln!(summary, "{ccy}: loglik {} aic {}", rec.loglik, rec.aic);
                lines.push_str(&json(&rec)?);
                lines.push('\n');
            }
            Err(e) => {
                let _ = writeln!(summary, "{ccy}: {e}");
            }
        }
    }
    let out = cli.out_dir();
    create_dir(&out)?;
    write_text(&out.join("margins.jsonl"), &lines)?;
    Ok(summary)
}

fn fit_copula(cli: &Cli, a: &CopulaArgs) -> Result<String> {
    let (_, sample) = read_pseudo_csv(&a.pseudo)?;
    let families: Vec<ModelFamily> =
        if a.family == "all" { ModelFamily::ALL.to_vec() } else { vec![a.family.parse()?] };
    let opts = FitOptions { seed: cli.seed.unwrap_or_default(), aic_free_weights: a.aic_free_weights, ..FitOptions::default() };
    let fits = families
        .iter()
        .map(|f| fit_mixture_mle(&sample, *f, None, &opts))
        .collect::<carrytail_core::Result<Vec<_>>>()?;
    let mut lines = String::new();
    for f in &fits {
        lines.push_str(&json(&FitRecord::from(f))?);
        lines.push('\n');
    }
    let out = cli.out_dir();
    create_dir(&out)?;
    write_text(&out.join("copula_fits.jsonl"), &lines)?;
    if let Some(best) = select_model(&fits) {
        write_text(&out.join("model.json"), &json(&ModelRecord::from(&best.model))?)?;
        let _ = writeln!(lines, "selected: {}", best.family);
    }
    Ok(lines)
}

fn taildep(cli: &Cli, a: &TaildepArgs) -> Result<String> {
    if a.pseudo.is_none() && a.model.is_none() {
        return Err(CliError::Config("taildep needs --pseudo or --model".into()));
    }
    let mut text = String::new();
    if let Some(path) = &a.model {
        let body = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let rec: ModelRecord = serde_json::from_str(&body).map_err(|e| CliError::format(path, e.to_string()))?;
        let model = MixtureCopula::try_from(&rec)?;
        let n = model.dim();
        let td = mixture_td(&model, n, a.h.unwrap_or(n - 1))?;
        text.push_str(&json(&TdRecord::new(&td, None))?);
        text.push('\n');
    }
    if let Some(path) = &a.pseudo {
        let (names, sample) = read_pseudo_csv(path)?;
        let out = cli.out_dir();
        create_dir(&out)?;
        let mut t = Table::create(&out.join("pairwise_td.csv"), &["ccy_i", "ccy_j", "lower", "upper"])?;
        let cfg = PercentileConfig::default();
        for i in 0..sample.dim() {
            for j in i + 1..sample.dim() {
                let td = robust_td_columns(&sample.column(i), &sample.column(j), &cfg)?;
                t.row([names[i].clone(), names[j].clone(), td.lower.to_string(), td.upper.to_string()])?;
                let _ = writeln!(text, "{} {}: lower {} upper {}", names[i], names[j], td.lower, td.upper);
            }
        }
        t.finish()?;
    }
    Ok(text)
}

fn run(cli: &Cli) -> Result<String> {
    let cfg = cli.run_config()?;
    let summary = pipeline::run(&cfg, cli.jobs)?;
    Ok(format!(
        "bundle: {}\ndays: {}, skipped windows: {}\n{}",
        cfg.out.display(),
        summary.days,
        summary.skipped,
        summary.aic_table
    ))
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<String> {
    let seed = cli.seed.ok_or_else(|| CliError::Config("simulate needs --seed".into()))?;
    let family: Family = a.family.parse()?;
    let g = Generator::new(family, a.theta, a.beta)?;
    let model = MixtureCopula::single(g, a.dim)?;
    let sample = sample_copula(&model, a.n, &mut substream(seed, "simulate"));
    let path = match &a.output {
        Some(p) => p.clone(),
        None => {
            let out = cli.out_dir();
            create_dir(&out)?;
            out.join("simulated.csv")
        }
    };
    write_pseudo_csv(&path, &sample)?;
    Ok(format!("{} x {} sample written to {}\n", a.n, a.dim, path.display()))
}
