//! Shared helpers and independent oracles for the integration suites.
//!
//! The oracles below are deliberately coded from the defining formulas with
//! direct double loops; they must not share code with the estimator paths
//! they check.

#![allow(dead_code)]

use ltrc::{LtrcObservation, LtrcSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub fn sample_from(x: &[f64], t: &[f64], z: &[f64], delta: &[bool]) -> LtrcSample<f64> {
    let raw = x
        .iter()
        .zip(t)
        .zip(z)
        .zip(delta)
        .map(|(((&x, &t), &z), &d)| LtrcObservation::scalar(x, z, t, d))
        .collect();
    LtrcSample::validate(raw).unwrap()
}

/// Random valid LTRC sample with continuous (tie-free) values.
pub fn random_sample(rng: &mut ChaCha12Rng, n: usize) -> LtrcSample<f64> {
    loop {
        let mut x = Vec::with_capacity(n);
        let mut t = Vec::with_capacity(n);
        let mut z = Vec::with_capacity(n);
        let mut delta = Vec::with_capacity(n);
        for _ in 0..n {
            let ti: f64 = rng.random_range(-2.0..2.0);
            let gap: f64 = rng.random_range(0.0..3.0);
            x.push(rng.random_range(-1.0..1.0));
            t.push(ti);
            z.push(ti + gap);
            delta.push(rng.random_bool(0.7));
        }
        // Ties are null events under the continuous model; regenerate on the
        // (essentially impossible) collision.
        let mut zs = z.clone();
        zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ts = t.clone();
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if zs.windows(2).any(|w| w[0] == w[1]) || ts.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        return sample_from(&x, &t, &z, &delta);
    }
}

pub fn seeded(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Kaplan-Meier distribution-function oracle for right-censored data
/// (no truncation): risk set counted as `#{j : z_j ≥ v}`.
pub fn kaplan_meier_cdf(z: &[f64], delta: &[bool], y: f64) -> f64 {
    let mut times: Vec<f64> = z.to_vec();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    let mut surv = 1.0;
    for &v in times.iter().filter(|&&v| v <= y) {
        let deaths = z
            .iter()
            .zip(delta)
            .filter(|(&zj, &dj)| zj == v && dj)
            .count();
        if deaths == 0 {
            continue;
        }
        let at_risk = z.iter().filter(|&&zj| zj >= v).count();
        surv *= 1.0 - deaths as f64 / at_risk as f64;
    }
    1.0 - surv
}

/// Lynden-Bell distribution-function oracle for purely truncated data
/// (no censoring): risk set `#{j : t_j ≤ v ≤ z_j}` by direct double loop.
pub fn lynden_bell_cdf(t: &[f64], z: &[f64], y: f64) -> f64 {
    let mut surv = 1.0;
    for &v in z.iter().filter(|&&v| v <= y) {
        let at_risk = t
            .iter()
            .zip(z)
            .filter(|(&tj, &zj)| tj <= v && v <= zj)
            .count();
        surv *= 1.0 - 1.0 / at_risk as f64;
    }
    1.0 - surv
}

/// Plain empirical distribution function.
pub fn ecdf_oracle(z: &[f64], y: f64) -> f64 {
    z.iter().filter(|&&v| v <= y).count() as f64 / z.len() as f64
}

/// Nadaraya-Watson oracle with a Gaussian kernel.
pub fn nadaraya_watson(x: &[f64], y: &[f64], h: f64, x0: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let u = (x0 - xi) / h;
        let k = (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
        num += k * yi;
        den += k;
    }
    num / den
}

/// Simpson quadrature on a uniform grid.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> f64 {
    let m = if intervals.is_multiple_of(2) {
        intervals
    } else {
        intervals + 1
    };
    let h = (hi - lo) / m as f64;
    let mut acc = f(lo) + f(hi);
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + k as f64 * h);
    }
    acc * h / 3.0
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

pub fn median_of(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
