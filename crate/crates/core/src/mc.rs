//! Monte Carlo campaigns: coverage probabilities and average widths over a
//! covariate grid, normalized deviations at a fixed point with their kernel
//! density and QQ data, and a Kolmogorov–Smirnov summary of normality.
//!
//! Replications run in parallel with seeds derived from the base seed and
//! the replication index, so a campaign is reproducible regardless of the
//! thread schedule. Aggregation excludes failed grid points rather than
//! imputing them; the per-point denominator plus the failure count always
//! equals the replication count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::EstimatorConfig;
use crate::error::{LtrcError, Result};
use crate::regress::{estimate_at, lscv_bandwidth};
use crate::simulate::{derive_seed, gen_ltrc_sample, SimConfig};
use crate::stats::{ks_statistic, normal_cdf, normal_pdf, normal_quantile};
use crate::survival::SurvivalFit;

/// Per-replication bandwidth selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthPolicy {
    /// One bandwidth for every replication.
    Fixed(f64),
    /// Least-squares cross-validation over this candidate grid, run once per
    /// replication.
    Lscv(Vec<f64>),
}

/// Campaign configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub sim: SimConfig,
    pub est: EstimatorConfig<f64>,
    pub bandwidth: BandwidthPolicy,
    /// Number of replications `B`.
    pub replications: usize,
    /// Confidence-interval evaluation grid.
    pub x_grid: Vec<f64>,
    /// Complement of the confidence level (0.05 for 95% intervals).
    pub eta: f64,
    /// Point at which normalized deviations are collected.
    pub eval_point: f64,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.replications == 0 {
            return Err(LtrcError::InvalidConfig(
                "at least one replication required".into(),
            ));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(LtrcError::InvalidConfig("eta must lie in (0, 1)".into()));
        }
        if self.x_grid.is_empty() {
            return Err(LtrcError::InvalidConfig("x grid must be non-empty".into()));
        }
        if let BandwidthPolicy::Fixed(h) = self.bandwidth {
            if !(h > 0.0) {
                return Err(LtrcError::InvalidConfig(
                    "fixed bandwidth must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Evaluation grid `x ∈ [−1, 1]` with increment 0.1.
    pub fn unit_grid() -> Vec<f64> {
        (-10..=10).map(|k| k as f64 / 10.0).collect()
    }
}

/// Point estimate and standard error `σ̂/√(n hᵈ)` of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub m_hat: f64,
    pub se: f64,
}

/// Pointwise medians of the estimate and interval endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub x: f64,
    pub m_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    /// `√B · D_B`, comparable against the Kolmogorov critical values.
    pub scaled: f64,
}

/// Aggregated campaign output. Identical configurations produce identical
/// reports, byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    /// Normalized deviations `√(n h)/σ̂(x₀) · (m̂(x₀) − m(x₀))`, replication
    /// order, failures omitted.
    pub mn_values: Vec<f64>,
    /// Per-grid-point coverage of the true regression value.
    pub coverage: Vec<f64>,
    /// Per-grid-point mean interval width.
    pub avg_width: Vec<f64>,
    /// Coverage pooled over point-replication pairs.
    pub pooled_coverage: f64,
    /// Width pooled over point-replication pairs.
    pub pooled_avg_width: f64,
    /// Mean of the per-point coverages (alternative aggregation).
    pub mean_point_coverage: f64,
    /// Failed estimations per grid point.
    pub point_failures: Vec<usize>,
    /// Failed normalized-deviation evaluations.
    pub eval_failures: usize,
    /// Failure reasons with counts.
    pub failure_reasons: BTreeMap<String, usize>,
    /// Bandwidth used by each replication (None when the replication failed
    /// before estimation).
    pub chosen_bandwidths: Vec<Option<f64>>,
    /// Kernel density of the normalized deviations.
    pub density_curve: Vec<(f64, f64)>,
    /// `(Φ⁻¹((i−0.5)/B), sorted deviation)` pairs.
    pub qq_pairs: Vec<(f64, f64)>,
    /// KS summary against the standard normal; absent when fewer than 20
    /// deviations were collected.
    pub ks: Option<KsReport>,
    /// Figure-8-style confidence band data.
    pub bands: Vec<BandRow>,
    /// Raw per-replication, per-point cells for custom aggregation.
    pub records: Vec<Vec<Option<GridCell>>>,
    /// Mean realized censoring rate across replications.
    pub mean_cr_realized: f64,
    /// Mean realized truncation rate across replications.
    pub mean_tr_realized: f64,
}

struct RepOutcome {
    bandwidth: Option<f64>,
    cells: Vec<Option<GridCell>>,
    mn: Option<f64>,
    reasons: Vec<String>,
    cr: f64,
    tr: f64,
    alive: bool,
}

fn run_replication(cfg: &McConfig, b: usize) -> RepOutcome {
    let n_points = cfg.x_grid.len();
    let dead = |reason: String| RepOutcome {
        bandwidth: None,
        cells: vec![None; n_points],
        mn: None,
        reasons: vec![reason],
        cr: f64::NAN,
        tr: f64::NAN,
        alive: false,
    };

    let mut sim = cfg.sim.clone();
    sim.seed = derive_seed(cfg.sim.seed, b as u64);
    let (sample, stats) = match gen_ltrc_sample(&sim) {
        Ok(v) => v,
        Err(e) => return dead(e.to_string()),
    };
    let fit = match SurvivalFit::fit(&sample) {
        Ok(v) => v,
        Err(e) => return dead(e.to_string()),
    };
    let h = match &cfg.bandwidth {
        BandwidthPolicy::Fixed(h) => *h,
        BandwidthPolicy::Lscv(grid) => match lscv_bandwidth(&sample, &fit, &cfg.est, grid) {
            Ok(h) => h,
            Err(e) => return dead(format!("lscv: {e}")),
        },
    };
    let est = cfg.est.with_bandwidth(h);
    let scale = (sample.n() as f64 * h.powi(sample.dim() as i32)).sqrt();

    let mut reasons = Vec::new();
    let cells: Vec<Option<GridCell>> = cfg
        .x_grid
        .iter()
        .map(|&x| match estimate_at(&sample, &fit, &est, &[x], cfg.eta) {
            Ok(r) => Some(GridCell {
                m_hat: r.m_hat,
                se: r.sigma_hat / scale,
            }),
            Err(e) => {
                reasons.push(e.to_string());
                None
            }
        })
        .collect();

    let mn = match estimate_at(&sample, &fit, &est, &[cfg.eval_point], cfg.eta) {
        Ok(r) if r.sigma_hat > 0.0 => {
            Some((r.m_hat - cfg.sim.m_true(cfg.eval_point)) / (r.sigma_hat / scale))
        }
        Ok(_) => {
            reasons.push("zero sigma at evaluation point".into());
            None
        }
        Err(e) => {
            reasons.push(format!("eval point: {e}"));
            None
        }
    };

    RepOutcome {
        bandwidth: Some(h),
        cells,
        mn,
        reasons,
        cr: stats.cr_realized,
        tr: stats.tr_realized,
        alive: true,
    }
}

/// Runs a full campaign.
pub fn run_campaign(cfg: &McConfig) -> Result<McReport> {
    cfg.validate()?;
    let b_total = cfg.replications;

    let outcomes: Vec<RepOutcome> = (0..b_total)
        .into_par_iter()
        .map(|b| run_replication(cfg, b))
        .collect();

    if outcomes.iter().all(|o| !o.alive) {
        return Err(LtrcError::AllReplicationsFailed);
    }

    let n_points = cfg.x_grid.len();
    let q = normal_quantile(1.0 - cfg.eta / 2.0);

    let mut coverage = vec![0.0; n_points];
    let mut avg_width = vec![0.0; n_points];
    let mut successes = vec![0usize; n_points];
    let mut pooled_cover = 0.0;
    let mut pooled_width = 0.0;
    let mut pooled_count = 0usize;
    let mut failure_reasons: BTreeMap<String, usize> = BTreeMap::new();
    let mut mn_values = Vec::new();
    let mut chosen_bandwidths = Vec::with_capacity(b_total);
    let mut records = Vec::with_capacity(b_total);
    let mut cr_sum = 0.0;
    let mut tr_sum = 0.0;
    let mut alive = 0usize;

    for outcome in &outcomes {
        for reason in &outcome.reasons {
            *failure_reasons.entry(reason.clone()).or_insert(0) += 1;
        }
        if outcome.alive {
            alive += 1;
            cr_sum += outcome.cr;
            tr_sum += outcome.tr;
        }
        if let Some(mn) = outcome.mn {
            mn_values.push(mn);
        }
        for (j, cell) in outcome.cells.iter().enumerate() {
            if let Some(c) = cell {
                let truth = cfg.sim.m_true(cfg.x_grid[j]);
                let half = q * c.se;
                let covered = (truth - c.m_hat).abs() <= half;
                coverage[j] += if covered { 1.0 } else { 0.0 };
                avg_width[j] += 2.0 * half;
                successes[j] += 1;
                pooled_cover += if covered { 1.0 } else { 0.0 };
                pooled_width += 2.0 * half;
                pooled_count += 1;
            }
        }
        chosen_bandwidths.push(outcome.bandwidth);
        records.push(outcome.cells.clone());
    }

    let mut point_failures = vec![0usize; n_points];
    let mut covered_points = 0usize;
    let mut mean_point_coverage = 0.0;
    for j in 0..n_points {
        point_failures[j] = b_total - successes[j];
        if successes[j] > 0 {
            coverage[j] /= successes[j] as f64;
            avg_width[j] /= successes[j] as f64;
            mean_point_coverage += coverage[j];
            covered_points += 1;
        }
    }
    if covered_points > 0 {
        mean_point_coverage /= covered_points as f64;
    }
    if pooled_count > 0 {
        pooled_cover /= pooled_count as f64;
        pooled_width /= pooled_count as f64;
    }

    let bands = (0..n_points)
        .map(|j| {
            let mut m: Vec<f64> = Vec::new();
            let mut lo: Vec<f64> = Vec::new();
            let mut hi: Vec<f64> = Vec::new();
            for rep in &records {
                if let Some(c) = rep[j] {
                    m.push(c.m_hat);
                    lo.push(c.m_hat - q * c.se);
                    hi.push(c.m_hat + q * c.se);
                }
            }
            BandRow {
                x: cfg.x_grid[j],
                m_hat: median(&mut m),
                ci_lo: median(&mut lo),
                ci_hi: median(&mut hi),
            }
        })
        .collect();

    let density_curve = if mn_values.is_empty() {
        Vec::new()
    } else {
        density_of_mn(&mn_values)
    };
    let qq_pairs = if mn_values.is_empty() {
        Vec::new()
    } else {
        qq_data(&mn_values)
    };
    let ks = (mn_values.len() >= 20).then(|| normality_check(&mn_values));

    Ok(McReport {
        eval_failures: b_total - mn_values.len(),
        mn_values,
        coverage,
        avg_width,
        pooled_coverage: pooled_cover,
        pooled_avg_width: pooled_width,
        mean_point_coverage,
        point_failures,
        failure_reasons,
        chosen_bandwidths,
        density_curve,
        qq_pairs,
        ks,
        bands,
        records,
        mean_cr_realized: if alive > 0 {
            cr_sum / alive as f64
        } else {
            f64::NAN
        },
        mean_tr_realized: if alive > 0 {
            tr_sum / alive as f64
        } else {
            f64::NAN
        },
    })
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Recomputes coverage per grid point at a different interval level from the
/// raw campaign records.
pub fn coverage_at_eta(
    records: &[Vec<Option<GridCell>>],
    x_grid: &[f64],
    sim: &SimConfig,
    eta: f64,
) -> Vec<f64> {
    let q = normal_quantile(1.0 - eta / 2.0);
    x_grid
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let truth = sim.m_true(x);
            let mut hits = 0usize;
            let mut total = 0usize;
            for rep in records {
                if let Some(c) = rep[j] {
                    total += 1;
                    if (truth - c.m_hat).abs() <= q * c.se {
                        hits += 1;
                    }
                }
            }
            if total == 0 {
                f64::NAN
            } else {
                hits as f64 / total as f64
            }
        })
        .collect()
}

/// Gaussian kernel density of the normalized deviations on a 512-point
/// grid, bandwidth `h_B = 1.6 B^{−1/5}`.
///
/// The grid spans four bandwidths beyond the extremes so that the trapezoid
/// mass stays within 1e-3 of one even for degenerate samples.
pub fn density_of_mn(values: &[f64]) -> Vec<(f64, f64)> {
    assert!(!values.is_empty());
    let b = values.len() as f64;
    let h = 1.6 * b.powf(-0.2);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min) - 4.0 * h;
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 4.0 * h;
    let points = 512usize;
    (0..points)
        .map(|k| {
            let g = lo + (hi - lo) * k as f64 / (points - 1) as f64;
            let dens = values.iter().map(|&v| normal_pdf((g - v) / h)).sum::<f64>() / (b * h);
            (g, dens)
        })
        .collect()
}

/// QQ pairs `(Φ⁻¹((i − 0.5)/B), v_(i))` for the sorted deviations.
pub fn qq_data(values: &[f64]) -> Vec<(f64, f64)> {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let b = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| (normal_quantile((i as f64 + 0.5) / b), v))
        .collect()
}

/// Kolmogorov–Smirnov statistic of the deviations against `N(0, 1)`,
/// with its `√B` scaling. Requires at least 20 values.
pub fn normality_check(values: &[f64]) -> KsReport {
    assert!(
        values.len() >= 20,
        "normality check needs at least 20 values"
    );
    let statistic = ks_statistic(values, normal_cdf);
    KsReport {
        statistic,
        scaled: (values.len() as f64).sqrt() * statistic,
    }
}
