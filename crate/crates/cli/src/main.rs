//! Command-line front end.
//!
//! Subcommands: `estimate` (fit on a data file over an x grid), `simulate`
//! (write one generated sample), `campaign` (one Monte Carlo campaign),
//! `table1` (one campaign per censoring/truncation/size cell).
//!
//! Configuration is a flat `key=value` file overridable with repeated
//! `--set key=value` flags; unknown keys are rejected. Every run writes a
//! JSON manifest echoing the fully resolved configuration, the seed and
//! timings. Exit codes: 0 success, 2 validation/configuration failure,
//! 3 estimation failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use ltrc::io::{self, HeaderMode};
use ltrc::mc::{run_campaign, BandwidthPolicy, McConfig};
use ltrc::regress::{estimate_grid, lscv_bandwidth};
use ltrc::simulate::{calibrate_rates, gen_ltrc_sample, SimConfig};
use ltrc::{EstimatorConfig, Kernel, LtrcError, Psi, SurvivalFit};

#[derive(Parser)]
#[command(
    name = "ltrc",
    version,
    about = "Robust kernel regression for left-truncated right-censored data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override or supply a single key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the regression function on a delimited data file.
    Estimate {
        /// Input sample: columns x(1..d), z, t, delta.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate one LTRC sample and write it as CSV.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output sample file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one Monte Carlo campaign.
    Campaign {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one campaign per (TR, CR, n) cell and emit the coverage table.
    Table1 {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("LTRC_THREADS") {
        match threads.parse::<usize>() {
            Ok(k) if k > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build_global();
            }
            _ => {
                eprintln!("error: LTRC_THREADS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }

    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate { input, cfg, out } => cmd_estimate(&input, &cfg, &out),
        Command::Simulate { cfg, out } => cmd_simulate(&cfg, &out),
        Command::Campaign { cfg, out } => cmd_campaign(&cfg, &out),
        Command::Table1 { cfg, out } => cmd_table1(&cfg, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn estimation(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<LtrcError> for CliError {
    fn from(e: LtrcError) -> Self {
        let code = match e {
            LtrcError::EmptySample
            | LtrcError::InvalidRecord { .. }
            | LtrcError::InvalidConfig(_)
            | LtrcError::InvalidInterval { .. }
            | LtrcError::Io(_) => 2,
            _ => 3,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Typed view over the key=value map; every key must be consumed.
struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    fn load(args: &ConfigArgs) -> Result<Self, CliError> {
        let mut values = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::config(format!("cannot read {}: {e}", path.display()))
                })?;
                io::parse_kv(&text).map_err(|e| CliError::config(e.to_string()))?
            }
            None => BTreeMap::new(),
        };
        for pair in &args.set {
            let Some((k, v)) = pair.split_once('=') else {
                return Err(CliError::config(format!(
                    "--set expects key=value, got {pair:?}"
                )));
            };
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self { values })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    fn take_f64(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::config(format!("key {key}: expected a number, got {v:?}"))),
        }
    }

    fn take_usize(&mut self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                CliError::config(format!("key {key}: expected an integer, got {v:?}"))
            }),
        }
    }

    fn take_u64(&mut self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                CliError::config(format!("key {key}: expected an integer, got {v:?}"))
            }),
        }
    }

    fn take_f64_opt(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::config(format!("key {key}: expected a number, got {v:?}"))),
        }
    }

    fn take_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map(Some)
                .map_err(|_| CliError::config(format!("key {key}: expected a number list"))),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        if self.values.is_empty() {
            Ok(())
        } else {
            let keys: Vec<&str> = self.values.keys().map(String::as_str).collect();
            Err(CliError::config(format!(
                "unknown configuration keys: {}",
                keys.join(", ")
            )))
        }
    }
}

fn parse_kernel(name: &str) -> Result<Kernel, CliError> {
    match name {
        "gaussian" => Ok(Kernel::Gaussian),
        "epanechnikov" => Ok(Kernel::Epanechnikov),
        other => Err(CliError::config(format!("unknown kernel {other:?}"))),
    }
}

fn parse_psi(name: &str) -> Result<Psi<f64>, CliError> {
    match name {
        "identity" => Ok(Psi::identity()),
        "pseudo_huber" => Ok(Psi::pseudo_huber()),
        other => Err(CliError::config(format!("unknown psi {other:?}"))),
    }
}

struct EstimatorSettings {
    cfg: EstimatorConfig<f64>,
    policy: BandwidthPolicy,
    eta: f64,
    x_grid: Vec<f64>,
    eval_point: f64,
}

fn estimator_settings(s: &mut Settings) -> Result<EstimatorSettings, CliError> {
    let kernel = parse_kernel(&s.take("kernel").unwrap_or_else(|| "gaussian".into()))?;
    let psi = parse_psi(&s.take("psi").unwrap_or_else(|| "pseudo_huber".into()))?;
    let bandwidth = s.take_f64_opt("bandwidth")?;
    let lscv_grid = s.take_list("lscv_grid")?;
    let policy = match (bandwidth, lscv_grid) {
        (Some(h), None) => BandwidthPolicy::Fixed(h),
        (None, Some(grid)) => BandwidthPolicy::Lscv(grid),
        (None, None) => {
            return Err(CliError::config(
                "set either bandwidth=H or lscv_grid=H1,H2,...",
            ));
        }
        (Some(_), Some(_)) => {
            return Err(CliError::config(
                "bandwidth and lscv_grid are mutually exclusive",
            ));
        }
    };

    // The configured bandwidth seeds the template; LSCV replaces it per run.
    let h0 = match &policy {
        BandwidthPolicy::Fixed(h) => *h,
        BandwidthPolicy::Lscv(grid) => grid.first().copied().unwrap_or(1.0),
    };
    let mut cfg = EstimatorConfig::new(kernel, psi, h0).map_err(CliError::from)?;
    cfg.support_bound = s.take_f64_opt("support_bound")?;
    cfg.root_tol = s.take_f64("root_tol", 1e-10)?;
    cfg.bracket_pad = s.take_f64("bracket_pad", 1.0)?;

    let eta = s.take_f64("eta", 0.05)?;
    if !(eta > 0.0 && eta < 1.0) {
        return Err(CliError::config("eta must lie in (0, 1)"));
    }

    let x_grid = match s.take_list("x_grid")? {
        Some(grid) => grid,
        None => {
            let lo = s.take_f64("x_min", -1.0)?;
            let hi = s.take_f64("x_max", 1.0)?;
            let step = s.take_f64("x_step", 0.1)?;
            if !(step > 0.0 && hi >= lo) {
                return Err(CliError::config(
                    "x grid requires x_min <= x_max and x_step > 0",
                ));
            }
            let count = ((hi - lo) / step).round() as usize;
            (0..=count).map(|k| lo + k as f64 * step).collect()
        }
    };
    let eval_point = s.take_f64("eval_point", 0.0)?;

    Ok(EstimatorSettings {
        cfg,
        policy,
        eta,
        x_grid,
        eval_point,
    })
}

struct SimSettings {
    sim: SimConfig,
    targets: Option<(f64, f64)>, // (cr, tr) when calibrated
}

fn sim_settings(s: &mut Settings, n_default: usize) -> Result<SimSettings, CliError> {
    let mut sim = SimConfig {
        rho: s.take_f64("rho", 0.9)?,
        sigma_noise: s.take_f64("sigma", 0.1)?,
        slope: s.take_f64("slope", 2.0)?,
        intercept: s.take_f64("intercept", 0.0)?,
        a0: s.take_f64("a0", 0.5)?,
        u0: s.take_f64("u0", -2.0)?,
        n: s.take_usize("n", n_default)?,
        seed: s.take_u64("seed", 1)?,
    };
    let target_cr = s.take_f64_opt("target_cr")?;
    let target_tr = s.take_f64_opt("target_tr")?;
    let targets = match (target_cr, target_tr) {
        (None, None) => None,
        (cr, tr) => {
            let cr = cr.unwrap_or(0.0);
            let tr = tr.unwrap_or(0.0);
            let (a0, u0) = calibrate_rates(cr, tr, &sim).map_err(CliError::from)?;
            sim.a0 = a0;
            sim.u0 = u0;
            Some((cr, tr))
        }
    };
    Ok(SimSettings { sim, targets })
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path)
        .map_err(|e| CliError::config(format!("cannot create {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

fn estimator_json(est: &EstimatorSettings) -> serde_json::Value {
    serde_json::json!({
        "kernel": est.cfg.kernel.name(),
        "psi": est.cfg.psi.name(),
        "bandwidth_policy": match &est.policy {
            BandwidthPolicy::Fixed(h) => serde_json::json!({"fixed": h}),
            BandwidthPolicy::Lscv(grid) => serde_json::json!({"lscv_grid": grid}),
        },
        "support_bound": est.cfg.support_bound,
        "root_tol": est.cfg.root_tol,
        "bracket_pad": est.cfg.bracket_pad,
        "eta": est.eta,
        "x_grid": est.x_grid,
        "eval_point": est.eval_point,
    })
}

fn sim_json(ss: &SimSettings) -> serde_json::Value {
    serde_json::json!({
        "rho": ss.sim.rho,
        "sigma": ss.sim.sigma_noise,
        "slope": ss.sim.slope,
        "intercept": ss.sim.intercept,
        "a0": ss.sim.a0,
        "u0": ss.sim.u0,
        "n": ss.sim.n,
        "seed": ss.sim.seed,
        "calibration_targets": ss.targets.map(|(cr, tr)| serde_json::json!({"cr": cr, "tr": tr})),
    })
}

fn cmd_estimate(input: &Path, args: &ConfigArgs, out: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let mut s = Settings::load(args)?;
    let delimiter = {
        let raw = s.take("delimiter").unwrap_or_else(|| ",".into());
        let mut chars = raw.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => c,
            _ => return Err(CliError::config("delimiter must be a single character")),
        }
    };
    let header = match s.take("header").unwrap_or_else(|| "auto".into()).as_str() {
        "auto" => HeaderMode::Auto,
        "yes" => HeaderMode::Yes,
        "no" => HeaderMode::No,
        other => return Err(CliError::config(format!("unknown header mode {other:?}"))),
    };
    let est = estimator_settings(&mut s)?;
    s.finish()?;

    let sample = io::read_sample_csv(input, delimiter, header).map_err(|e| match &e {
        LtrcError::InvalidRecord { index, reason } => CliError::config(format!(
            "{}: data row {}: {reason}",
            input.display(),
            index + 1
        )),
        _ => CliError::from(e),
    })?;
    let fit = SurvivalFit::fit(&sample).map_err(|e| CliError::estimation(e.to_string()))?;

    let (cfg, chosen_h) = match &est.policy {
        BandwidthPolicy::Fixed(h) => (est.cfg.with_bandwidth(*h), *h),
        BandwidthPolicy::Lscv(grid) => {
            let h = lscv_bandwidth(&sample, &fit, &est.cfg, grid)
                .map_err(|e| CliError::estimation(format!("lscv: {e}")))?;
            (est.cfg.with_bandwidth(h), h)
        }
    };

    let rows = estimate_grid(&sample, &fit, &cfg, &est.x_grid, est.eta);
    let all_failed = rows.iter().all(|(_, r)| r.is_err());

    ensure_dir(out)?;
    write_text(&out.join("estimates.csv"), &io::estimates_to_csv(&rows))?;
    let manifest = serde_json::json!({
        "command": "estimate",
        "input": input.display().to_string(),
        "n": sample.n(),
        "covariate_dim": sample.dim(),
        "delimiter": delimiter.to_string(),
        "mu_n": fit.mu_n,
        "estimator": estimator_json(&est),
        "selected_bandwidth": chosen_h,
        "elapsed_seconds": started.elapsed().as_secs_f64(),
    });
    write_text(
        &out.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest).unwrap(),
    )?;

    if all_failed {
        return Err(CliError::estimation(
            "estimation failed at every grid point",
        ));
    }
    Ok(())
}

fn cmd_simulate(args: &ConfigArgs, out: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let mut s = Settings::load(args)?;
    let ss = sim_settings(&mut s, 100)?;
    s.finish()?;

    let (sample, stats) = gen_ltrc_sample(&ss.sim).map_err(CliError::from)?;
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            ensure_dir(dir)?;
        }
    }
    io::write_sample_csv(out, &sample).map_err(CliError::from)?;

    let manifest = serde_json::json!({
        "command": "simulate",
        "sim": sim_json(&ss),
        "stats": {
            "n_drawn": stats.n_drawn,
            "cr_realized": stats.cr_realized,
            "tr_realized": stats.tr_realized,
        },
        "elapsed_seconds": started.elapsed().as_secs_f64(),
    });
    let manifest_path = PathBuf::from(format!("{}.manifest.json", out.display()));
    write_text(
        &manifest_path,
        &serde_json::to_string_pretty(&manifest).unwrap(),
    )
}

fn campaign_outputs(
    out: &Path,
    report: &ltrc::mc::McReport,
    tr_pct: f64,
    cr_pct: f64,
    n: usize,
) -> Result<(), CliError> {
    ensure_dir(out)?;
    let mut table = String::from(io::TABLE1_HEADER);
    table.push_str(&io::table1_row(tr_pct, cr_pct, n, report));
    write_text(&out.join("table1.csv"), &table)?;
    write_text(&out.join("mn_density.csv"), &io::mn_density_to_csv(report))?;
    write_text(&out.join("qq.csv"), &io::qq_to_csv(report))?;
    write_text(&out.join("bands.csv"), &io::bands_to_csv(report))?;
    Ok(())
}

fn cmd_campaign(args: &ConfigArgs, out: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let mut s = Settings::load(args)?;
    let ss = sim_settings(&mut s, 300)?;
    let est = estimator_settings(&mut s)?;
    let replications = s.take_usize("b", 200)?;
    s.finish()?;

    let cfg = McConfig {
        sim: ss.sim.clone(),
        est: est.cfg.clone(),
        bandwidth: est.policy.clone(),
        replications,
        x_grid: est.x_grid.clone(),
        eta: est.eta,
        eval_point: est.eval_point,
    };
    let report = run_campaign(&cfg).map_err(CliError::from)?;

    let (tr_pct, cr_pct) = match ss.targets {
        Some((cr, tr)) => (tr * 100.0, cr * 100.0),
        None => (
            report.mean_tr_realized * 100.0,
            report.mean_cr_realized * 100.0,
        ),
    };
    campaign_outputs(out, &report, tr_pct, cr_pct, ss.sim.n)?;

    let manifest = serde_json::json!({
        "command": "campaign",
        "sim": sim_json(&ss),
        "estimator": estimator_json(&est),
        "replications": replications,
        "coverage_by_x": est.x_grid.iter().zip(&report.coverage)
            .map(|(x, c)| serde_json::json!([x, c])).collect::<Vec<_>>(),
        "pooled_coverage": report.pooled_coverage,
        "pooled_avg_width": report.pooled_avg_width,
        "mean_point_coverage": report.mean_point_coverage,
        "coverage_aggregation": "pooled over point-replication pairs; per-point mean also emitted",
        "bands_construction": "pointwise medians of the estimate and interval endpoints",
        "ks": report.ks.map(|k| serde_json::json!({"statistic": k.statistic, "scaled": k.scaled})),
        "mean_cr_realized": report.mean_cr_realized,
        "mean_tr_realized": report.mean_tr_realized,
        "eval_failures": report.eval_failures,
        "elapsed_seconds": started.elapsed().as_secs_f64(),
    });
    write_text(
        &out.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest).unwrap(),
    )
}

fn cmd_table1(args: &ConfigArgs, out: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let mut s = Settings::load(args)?;
    let cells_raw = s
        .take("cells")
        .ok_or_else(|| CliError::config("table1 requires cells=TR:CR:N;TR:CR:N;..."))?;
    let ss = sim_settings(&mut s, 300)?;
    let est = estimator_settings(&mut s)?;
    let replications = s.take_usize("b", 200)?;
    s.finish()?;

    let mut cells = Vec::new();
    for part in cells_raw.split(';') {
        let fields: Vec<&str> = part.split(':').collect();
        if fields.len() != 3 {
            return Err(CliError::config(format!("bad cell {part:?}, want TR:CR:N")));
        }
        let tr: f64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("bad TR in {part:?}")))?;
        let cr: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("bad CR in {part:?}")))?;
        let n: usize = fields[2]
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("bad N in {part:?}")))?;
        cells.push((tr, cr, n));
    }

    ensure_dir(out)?;
    let mut table = String::from(io::TABLE1_HEADER);
    let mut cell_manifests = Vec::new();
    let mut any_failed = false;
    for &(tr_pct, cr_pct, n) in &cells {
        let cell_started = Instant::now();
        let outcome = (|| -> Result<serde_json::Value, LtrcError> {
            let (a0, u0) = calibrate_rates(cr_pct / 100.0, tr_pct / 100.0, &ss.sim)?;
            let sim = SimConfig {
                a0,
                u0,
                n,
                ..ss.sim.clone()
            };
            let cfg = McConfig {
                sim,
                est: est.cfg.clone(),
                bandwidth: est.policy.clone(),
                replications,
                x_grid: est.x_grid.clone(),
                eta: est.eta,
                eval_point: est.eval_point,
            };
            let report = run_campaign(&cfg)?;
            table.push_str(&io::table1_row(tr_pct, cr_pct, n, &report));
            Ok(serde_json::json!({
                "tr_pct": tr_pct, "cr_pct": cr_pct, "n": n,
                "a0": a0, "u0": u0,
                "coverage": report.pooled_coverage,
                "avg_width": report.pooled_avg_width,
                "mean_point_coverage": report.mean_point_coverage,
                "mean_cr_realized": report.mean_cr_realized,
                "mean_tr_realized": report.mean_tr_realized,
                "elapsed_seconds": cell_started.elapsed().as_secs_f64(),
            }))
        })();
        match outcome {
            Ok(value) => cell_manifests.push(value),
            Err(e) => {
                any_failed = true;
                cell_manifests.push(serde_json::json!({
                    "tr_pct": tr_pct, "cr_pct": cr_pct, "n": n,
                    "error": e.to_string(),
                }));
            }
        }
    }

    write_text(&out.join("table1.csv"), &table)?;
    let manifest = serde_json::json!({
        "command": "table1",
        "sim_template": sim_json(&ss),
        "estimator": estimator_json(&est),
        "replications": replications,
        "coverage_aggregation": "pooled over point-replication pairs; per-point mean also emitted",
        "cells": cell_manifests,
        "elapsed_seconds": started.elapsed().as_secs_f64(),
    });
    write_text(
        &out.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest).unwrap(),
    )?;

    if any_failed {
        return Err(CliError::estimation("one or more table cells failed"));
    }
    Ok(())
}
