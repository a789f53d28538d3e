mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn carrytail(args: &[&str]) -> Output {
    Command::new(common::bin()).args(args).output().expect("spawn carrytail")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_prices(dir: &Path, name: &str, rows: &[&str]) -> String {
    let path = dir.join(name);
    fs::write(&path, format!("date,currency,price\n{}\n", rows.join("\n"))).unwrap();
    path.to_str().unwrap().to_string()
}

fn simulate(out: &Path, family: &str, theta: &str, n: usize, dim: usize, seed: u64) -> Output {
    carrytail(&[
        "simulate",
        "--family",
        family,
        "--theta",
        theta,
        "--n",
        &n.to_string(),
        "--dim",
        &dim.to_string(),
        "--seed",
        &seed.to_string(),
        "--output",
        p(out),
    ])
}

#[test]
fn ingest_writes_panel() {
    let dir = TempDir::new().unwrap();
    let fx = common::fixtures();
    let out = dir.path().join("out");
    let o = carrytail(&[
        "ingest",
        "--spot",
        p(&fx.join("spot.csv")),
        "--forward",
        p(&fx.join("forward.csv")),
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("currencies (15)"), "{text}");
    assert!(text.contains("dates: 300"), "{text}");
    let panel = carrytail::formats::read_panel(&out.join("panel.csv")).unwrap();
    assert_eq!(panel, common::fixture_panel());
}

#[test]
fn ingest_missing_file_is_io_error() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.csv");
    let fwd = write_prices(dir.path(), "f.csv", &["2020-01-01,AAA,1"]);
    let o = carrytail(&["ingest", "--spot", p(&missing), "--forward", &fwd, "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.csv"), "{}", stderr(&o));
}

#[test]
fn ingest_duplicate_is_validation_error() {
    let dir = TempDir::new().unwrap();
    let spot = write_prices(dir.path(), "s.csv", &["2020-01-01,AAA,1", "2020-01-01,AAA,1.1"]);
    let fwd = write_prices(dir.path(), "f.csv", &["2020-01-01,AAA,1"]);
    let o = carrytail(&["ingest", "--spot", &spot, "--forward", &fwd, "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("AAA"), "{}", stderr(&o));
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(simulate(&a, "clayton", "2", 1000, 3, 7).status.success());
    assert!(simulate(&b, "clayton", "2", 1000, 3, 7).status.success());
    let (names, sample) = carrytail::formats::read_pseudo_csv(&a).unwrap();
    assert_eq!(names.len(), 3);
    assert_eq!(sample.n_rows(), 1000);
    assert!(sample.rows().flatten().all(|&u| u > 0.0 && u < 1.0));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = dir.path().join("c.csv");
    assert!(simulate(&c, "clayton", "2", 1000, 3, 8).status.success());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn simulate_rejects_invalid_parameters() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x.csv");
    let o = simulate(&out, "gumbel", "0.5", 100, 2, 1);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("theta must be >= 1"), "{}", stderr(&o));

    let o = simulate(&out, "frank", "-2", 100, 3, 1);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("negative theta only in dimension 2"), "{}", stderr(&o));

    let o = simulate(&out, "frank", "-2", 100, 2, 1);
    assert!(o.status.success(), "{}", stderr(&o));

    let o = carrytail(&["simulate", "--family", "clayton", "--theta", "2", "--n", "10", "--output", p(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("--seed"));
}

#[test]
fn fit_copula_and_taildep() {
    let dir = TempDir::new().unwrap();
    let sample = dir.path().join("u.csv");
    assert!(simulate(&sample, "gumbel", "2", 400, 3, 11).status.success());
    let out = dir.path().join("fit");
    let o = carrytail(&["fit-copula", "--pseudo", p(&sample), "--out", p(&out), "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines = fs::read_to_string(out.join("copula_fits.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 3);
    for l in lines.lines() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert!(v["loglik"].as_f64().unwrap() > 0.0);
    }
    let model = out.join("model.json");
    assert!(model.exists());

    let o = carrytail(&["taildep", "--model", p(&model), "--pseudo", p(&sample), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = String::from_utf8(o.stdout).unwrap();
    let td: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    let upper = td["upper"].as_f64().unwrap();
    assert!(upper > 0.5 && upper < 1.0, "{upper}");
    let pairs = fs::read_to_string(out.join("pairwise_td.csv")).unwrap();
    assert_eq!(pairs.lines().count(), 4);
    assert!(pairs.starts_with("ccy_i,ccy_j,lower,upper"));
}

#[test]
fn fit_copula_single_family() {
    let dir = TempDir::new().unwrap();
    let sample = dir.path().join("u.csv");
    assert!(simulate(&sample, "clayton", "2", 300, 2, 5).status.success());
    let out = dir.path().join("fit");
    let o = carrytail(&["fit-copula", "--pseudo", p(&sample), "--family", "opc", "--out", p(&out), "--seed", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines = fs::read_to_string(out.join("copula_fits.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 1);
    assert!(lines.contains("\"opc\""), "{lines}");

    let o = carrytail(&["fit-copula", "--pseudo", p(&sample), "--family", "tcopula", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn fit_copula_too_few_rows() {
    let dir = TempDir::new().unwrap();
    let sample = dir.path().join("u.csv");
    assert!(simulate(&sample, "clayton", "2", 20, 2, 5).status.success());
    let o = carrytail(&["fit-copula", "--pseudo", p(&sample), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn baskets_and_margins_from_config() {
    let dir = TempDir::new().unwrap();
    let cfg = common::fixtures().join("run.toml");
    let out = dir.path().join("b");
    let o = carrytail(&["baskets", "--config", p(&cfg), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let baskets = fs::read_to_string(out.join("baskets.csv")).unwrap();
    assert!(baskets.lines().count() > 1);
    assert!(out.join("carry.csv").exists());

    let o = carrytail(&["fit-margins", "--config", p(&cfg), "--out", p(&out), "--end", "2012-12-31"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let margins = fs::read_to_string(out.join("margins.jsonl")).unwrap();
    assert_eq!(margins.lines().count(), 15);
    let rec: serde_json::Value = serde_json::from_str(margins.lines().next().unwrap()).unwrap();
    assert_eq!(rec["window_end"], "2012-12-31");

    let o = carrytail(&["fit-margins", "--config", p(&cfg), "--out", p(&out), "--model", "garch11", "--window", "500"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("sizing"), "{}", stderr(&o));
}

fn config_in(dir: &Path, extra: &str) -> std::path::PathBuf {
    let fx = common::fixtures();
    let body = format!(
        "spot = {:?}\nforward = {:?}\nseed = 1\n{extra}\n",
        fx.join("spot.csv").to_str().unwrap(),
        fx.join("forward.csv").to_str().unwrap()
    );
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn run_rejects_window_longer_than_panel() {
    let dir = TempDir::new().unwrap();
    let cfg = config_in(dir.path(), "window = 400\nallow_any_window = true");
    let o = carrytail(&["run", "--config", p(&cfg), "--out", p(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("sizing"), "{}", stderr(&o));
}

#[test]
fn run_rejects_nonstandard_window_and_unknown_keys() {
    let dir = TempDir::new().unwrap();
    let cfg = config_in(dir.path(), "window = 100");
    let o = carrytail(&["run", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("126 or 252"), "{}", stderr(&o));

    let cfg = config_in(dir.path(), "windw = 126");
    let o = carrytail(&["run", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn run_with_single_family() {
    let dir = TempDir::new().unwrap();
    let cfg = config_in(dir.path(), "families = [\"opc\"]\nwindow = 252");
    let out = dir.path().join("out");
    let o = carrytail(&["run", "--config", p(&cfg), "--out", p(&out), "--jobs", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let windows = fs::read_to_string(out.join("windows.jsonl")).unwrap();
    assert_eq!(windows.lines().count(), 2 * (299 - 251));
    for l in windows.lines() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        if let Some(fits) = v["fits"].as_array() {
            assert!(fits.iter().all(|f| f["family"] == "opc"), "{l}");
        }
    }
    let manifest = fs::read_to_string(out.join("MANIFEST")).unwrap();
    assert!(manifest.starts_with("status: complete"), "{manifest}");
    assert!(manifest.contains("windows.jsonl"));
}
