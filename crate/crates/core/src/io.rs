//! File formats: delimited sample ingestion, estimator/step-function CSV
//! exports, and the flat `key=value` configuration format.
//!
//! All CSV output uses `.` as decimal separator, `\n` line endings and
//! UTF-8. Floating-point values are written with Rust's shortest
//! round-trippable representation, so a written sample re-reads
//! bit-identically.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{LtrcError, Result};
use crate::mc::McReport;
use crate::regress::EstimateResult;
use crate::sample::{LtrcObservation, LtrcSample};
use crate::step::StepFunction;

/// Header handling on ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeaderMode {
    /// First line is a header.
    Yes,
    /// Data starts on the first line.
    No,
    /// Treat the first line as a header iff any of its fields fails to parse
    /// as a number.
    Auto,
}

/// Parses a delimited sample: columns `x(1..d), z, t, delta`, one record per
/// line, `#` comment lines ignored. The covariate dimension is inferred from
/// the column count.
pub fn parse_sample(text: &str, delimiter: char, header: HeaderMode) -> Result<LtrcSample<f64>> {
    let mut raw = Vec::new();
    let mut expected_cols: Option<usize> = None;
    let mut data_index = 0usize;
    let mut first_content_line = true;

    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(delimiter).map(str::trim).collect();
        if first_content_line {
            first_content_line = false;
            let is_header = match header {
                HeaderMode::Yes => true,
                HeaderMode::No => false,
                HeaderMode::Auto => fields.iter().any(|f| f.parse::<f64>().is_err()),
            };
            if is_header {
                expected_cols = Some(fields.len());
                continue;
            }
        }
        if fields.len() < 4 {
            return Err(LtrcError::InvalidRecord {
                index: data_index,
                reason: format!("expected at least 4 columns, found {}", fields.len()),
            });
        }
        if let Some(cols) = expected_cols {
            if fields.len() != cols {
                return Err(LtrcError::InvalidRecord {
                    index: data_index,
                    reason: format!("expected {cols} columns, found {}", fields.len()),
                });
            }
        } else {
            expected_cols = Some(fields.len());
        }

        let parse = |field: &str, name: &str| {
            field.parse::<f64>().map_err(|_| LtrcError::InvalidRecord {
                index: data_index,
                reason: format!("cannot parse {name} value {field:?}"),
            })
        };
        let d = fields.len() - 3;
        let mut x = Vec::with_capacity(d);
        for f in &fields[..d] {
            x.push(parse(f, "covariate")?);
        }
        let z = parse(fields[d], "z")?;
        let t = parse(fields[d + 1], "t")?;
        let delta_raw = parse(fields[d + 2], "delta")?;
        let delta = if delta_raw == 1.0 {
            true
        } else if delta_raw == 0.0 {
            false
        } else {
            return Err(LtrcError::InvalidRecord {
                index: data_index,
                reason: format!("delta must be 0 or 1, found {delta_raw}"),
            });
        };
        raw.push(LtrcObservation { x, z, t, delta });
        data_index += 1;
    }
    LtrcSample::validate(raw)
}

/// Reads a sample file; see [`parse_sample`].
pub fn read_sample_csv(
    path: impl AsRef<Path>,
    delimiter: char,
    header: HeaderMode,
) -> Result<LtrcSample<f64>> {
    parse_sample(&fs::read_to_string(path)?, delimiter, header)
}

/// Renders a sample with full round-trip precision.
pub fn sample_to_csv(sample: &LtrcSample<f64>) -> String {
    let d = sample.dim();
    let mut out = String::new();
    for j in 1..=d {
        if d == 1 {
            out.push_str("x,");
        } else {
            let _ = write!(out, "x{j},");
        }
    }
    out.push_str("z,t,delta\n");
    for obs in sample.observations() {
        for v in &obs.x {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{},{},{}", obs.z, obs.t, if obs.delta { 1 } else { 0 });
    }
    out
}

pub fn write_sample_csv(path: impl AsRef<Path>, sample: &LtrcSample<f64>) -> Result<()> {
    fs::write(path, sample_to_csv(sample))?;
    Ok(())
}

/// Writes a fitted step function as `y,value` rows plus a JSON metadata
/// sidecar (`<path>.meta.json`) carrying the estimator name, the sample size
/// and the truncation-probability estimate.
pub fn write_step_csv(
    path: impl AsRef<Path>,
    step: &StepFunction<f64>,
    estimator: &str,
    n: usize,
    mu_n: f64,
) -> Result<()> {
    let mut out = String::from("y,value\n");
    for (y, v) in step.jumps().iter().zip(step.values()) {
        let _ = writeln!(out, "{y},{v}");
    }
    fs::write(path.as_ref(), out)?;

    let meta = serde_json::json!({
        "estimator": estimator,
        "n": n,
        "mu_n": mu_n,
        "value_before_first_jump": step.floor(),
    });
    let sidecar = format!("{}.meta.json", path.as_ref().display());
    fs::write(
        sidecar,
        serde_json::to_string_pretty(&meta).expect("serializable"),
    )?;
    Ok(())
}

/// Renders grid-estimation rows; failed points appear as an empty row with
/// the failure in the status column.
pub fn estimates_to_csv(rows: &[(f64, Result<EstimateResult<f64>>)]) -> String {
    let mut out = String::from("x,m_hat,sigma_hat,ci_lo,ci_hi,n_effective,status\n");
    for (x, res) in rows {
        match res {
            Ok(r) => {
                let _ = writeln!(
                    out,
                    "{x},{},{},{},{},{},ok",
                    r.m_hat, r.sigma_hat, r.ci_lo, r.ci_hi, r.n_effective
                );
            }
            Err(e) => {
                let _ = writeln!(out, "{x},,,,,,{}", status_code(e));
            }
        }
    }
    out
}

fn status_code(e: &LtrcError) -> &'static str {
    match e {
        LtrcError::NoEffectiveData => "no_effective_data",
        LtrcError::NotEstimable { .. } => "not_estimable",
        LtrcError::DegenerateDerivative => "degenerate_derivative",
        LtrcError::BracketFailure(_) => "bracket_failure",
        LtrcError::ZeroRiskSet(_) => "zero_risk_set",
        _ => "error",
    }
}

/// Campaign outputs: density of the normalized deviations.
pub fn mn_density_to_csv(report: &McReport) -> String {
    let mut out = String::from("m_n,density\n");
    for (g, d) in &report.density_curve {
        let _ = writeln!(out, "{g},{d}");
    }
    out
}

/// Campaign outputs: QQ pairs.
pub fn qq_to_csv(report: &McReport) -> String {
    let mut out = String::from("theoretical_q,empirical_q\n");
    for (t, e) in &report.qq_pairs {
        let _ = writeln!(out, "{t},{e}");
    }
    out
}

/// Campaign outputs: pointwise median bands.
pub fn bands_to_csv(report: &McReport) -> String {
    let mut out = String::from("x,m_hat_median,ci_lo_median,ci_hi_median\n");
    for b in &report.bands {
        let _ = writeln!(out, "{},{},{},{}", b.x, b.m_hat, b.ci_lo, b.ci_hi);
    }
    out
}

/// One row of the coverage table.
pub fn table1_row(tr_pct: f64, cr_pct: f64, n: usize, report: &McReport) -> String {
    format!(
        "{tr_pct},{cr_pct},{n},{},{},{},{}\n",
        report.pooled_coverage,
        report.pooled_avg_width,
        report.mean_point_coverage,
        report.eval_failures
    )
}

pub const TABLE1_HEADER: &str =
    "tr_pct,cr_pct,n,coverage,avg_width,coverage_mean_over_points,eval_failures\n";

/// Parses the flat `key=value` configuration format: one pair per line,
/// `#` comments, duplicate keys rejected.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(LtrcError::InvalidConfig(format!(
                "line {}: expected key=value, found {line:?}",
                lineno + 1
            )));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if map.insert(key.clone(), value).is_some() {
            return Err(LtrcError::InvalidConfig(format!("duplicate key {key:?}")));
        }
    }
    Ok(map)
}

/// Renders a `key=value` map, sorted by key.
pub fn render_kv(map: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    for (k, v) in map {
        let _ = writeln!(out, "{k}={v}");
    }
    out
}
