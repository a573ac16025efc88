//! Kernel M-estimation of the regression function under left truncation and
//! right censoring.
//!
//! The estimate `m̂(x)` is the root in `θ` of the weighted score
//!
//! ```text
//! Ψ̂(x, θ) = μ_n/(n hⁿ) Σ_i K((x − X_i)/h) δ_i ψ(Z_i − θ) / (L_n(Z_i) Ḡ_n(Z_i))
//! ```
//!
//! restricted to observations whose guard product `L_n(Z_i) Ḡ_n(Z_i)` is
//! nonzero. The plug-in variance uses the squared-guard second moment and
//! the score derivative; the `μ_n` prefactor cancels in the root but not in
//! the variance, so it is kept everywhere.

use crate::config::EstimatorConfig;
use crate::error::{LtrcError, Result};
use crate::sample::LtrcSample;
use crate::scalar::Real;
use crate::stats::normal_quantile;
use crate::survival::SurvivalFit;

/// The weighted score at one evaluation point: kept observation indices,
/// their weights and their responses.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedScore<T> {
    pub eval_point: Vec<T>,
    pub kept_idx: Vec<usize>,
    pub weights: Vec<T>,
    pub responses: Vec<T>,
}

impl<T: Real> WeightedScore<T> {
    pub fn n_effective(&self) -> usize {
        self.kept_idx.len()
    }
}

/// Point estimate with its plug-in standard deviation, confidence interval
/// and solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult<T> {
    pub m_hat: T,
    pub sigma_hat: T,
    pub ci_lo: T,
    pub ci_hi: T,
    pub n_effective: usize,
    pub iterations: usize,
    pub bracket: (T, T),
}

fn resolved_bound<T: Real>(sample: &LtrcSample<T>, cfg: &EstimatorConfig<T>) -> T {
    cfg.support_bound.unwrap_or_else(|| sample.max_z())
}

fn bandwidth_power<T: Real>(cfg: &EstimatorConfig<T>, dim: usize) -> T {
    cfg.bandwidth.powi(dim as i32)
}

fn build_score_excluding<T: Real>(
    sample: &LtrcSample<T>,
    fit: &SurvivalFit<T>,
    cfg: &EstimatorConfig<T>,
    x: &[T],
    exclude: Option<usize>,
) -> Result<WeightedScore<T>> {
    assert_eq!(x.len(), sample.dim(), "evaluation point dimension mismatch");
    let bound = resolved_bound(sample, cfg);
    let n = T::from_usize(sample.n()).unwrap();
    let hd = bandwidth_power(cfg, sample.dim());

    let mut kept_idx = Vec::new();
    let mut weights = Vec::new();
    let mut responses = Vec::new();
    for (i, obs) in sample.observations().iter().enumerate() {
        if Some(i) == exclude || !obs.delta || obs.z > bound {
            continue;
        }
        let guard = fit.l_n.eval(obs.z) * fit.g_bar_n.eval(obs.z);
        if guard == T::zero() {
            continue;
        }
        let k = cfg.kernel.eval_scaled(&obs.x, x, cfg.bandwidth);
        if k == T::zero() {
            continue;
        }
        kept_idx.push(i);
        weights.push(fit.mu_n * k / (guard * n * hd));
        responses.push(obs.z);
    }
    // A fragmented risk set can drive μ_n to exactly zero, wiping every
    // weight; the score is useless then even though records were kept.
    if kept_idx.is_empty() || weights.iter().copied().sum::<T>() == T::zero() {
        return Err(LtrcError::NoEffectiveData);
    }
    Ok(WeightedScore {
        eval_point: x.to_vec(),
        kept_idx,
        weights,
        responses,
    })
}

/// Builds the weighted score of the M-estimator at `x`.
///
/// Observations that are censored, lie beyond the support bound, carry a
/// zero guard product or receive zero kernel weight are excluded.
pub fn build_score<T: Real>(
    sample: &LtrcSample<T>,
    fit: &SurvivalFit<T>,
    cfg: &EstimatorConfig<T>,
    x: &[T],
) -> Result<WeightedScore<T>> {
    build_score_excluding(sample, fit, cfg, x, None)
}

/// `Ψ̂(x, θ) = Σ_i w_i ψ(Z_i − θ)`; strictly decreasing in `θ`.
pub fn score_value<T: Real>(score: &WeightedScore<T>, cfg: &EstimatorConfig<T>, theta: T) -> T {
    score
        .weights
        .iter()
        .zip(&score.responses)
        .map(|(&w, &z)| w * cfg.psi.eval(z - theta))
        .sum()
}

/// Root of the score together with solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootResult<T> {
    pub root: T,
    pub iterations: usize,
    pub bracket: (T, T),
}

/// Solves `Ψ̂(x, θ) = 0` by bisection.
///
/// The bracket starts at the kept-response range padded by `bracket_pad`,
/// where an odd increasing ψ guarantees a sign change; it is doubled
/// geometrically as a defensive measure before bisecting to `root_tol`.
/// Bisection is used rather than Newton because ψ′ can be arbitrarily small
/// far from the data for bounded objectives.
pub fn solve_m_hat<T: Real>(
    score: &WeightedScore<T>,
    cfg: &EstimatorConfig<T>,
) -> Result<RootResult<T>> {
    if score.kept_idx.is_empty() {
        return Err(LtrcError::NoEffectiveData);
    }
    let mut z_min = T::infinity();
    let mut z_max = T::neg_infinity();
    for &z in &score.responses {
        z_min = z_min.min(z);
        z_max = z_max.max(z);
    }

    let mut lo = z_min - cfg.bracket_pad;
    let mut hi = z_max + cfg.bracket_pad;
    let mut f_lo = score_value(score, cfg, lo);
    let mut f_hi = score_value(score, cfg, hi);
    let mut expansions = 0;
    while f_lo * f_hi > T::zero() {
        if expansions >= 60 {
            return Err(LtrcError::BracketFailure(expansions));
        }
        let width = hi - lo;
        lo -= width;
        hi += width;
        f_lo = score_value(score, cfg, lo);
        f_hi = score_value(score, cfg, hi);
        expansions += 1;
    }
    let bracket = (lo, hi);

    if f_lo == T::zero() {
        return Ok(RootResult {
            root: lo,
            iterations: 0,
            bracket,
        });
    }
    if f_hi == T::zero() {
        return Ok(RootResult {
            root: hi,
            iterations: 0,
            bracket,
        });
    }

    let mut iterations = 0;
    while hi - lo > cfg.root_tol && iterations < cfg.root_max_iter {
        let mid = (lo + hi) / T::of(2.0);
        let f_mid = score_value(score, cfg, mid);
        if f_mid == T::zero() {
            return Ok(RootResult {
                root: mid,
                iterations,
                bracket,
            });
        }
        if f_mid * f_lo > T::zero() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let mid = (lo + hi) / T::of(2.0);
    Ok(RootResult {
        root: mid,
        iterations,
        bracket,
    })
}

/// Closed-form classical regression estimator (identity objective):
/// the ratio of guard-weighted kernel sums, no root finding.
pub fn classical_m_hat<T: Real>(
    sample: &LtrcSample<T>,
    fit: &SurvivalFit<T>,
    cfg: &EstimatorConfig<T>,
    x: &[T],
) -> Result<T> {
    let score = build_score(sample, fit, cfg, x)?;
    let den: T = score.weights.iter().copied().sum();
    if den == T::zero() {
        return Err(LtrcError::NoEffectiveData);
    }
    let num: T = score
        .weights
        .iter()
        .zip(&score.responses)
        .map(|(&w, &z)| w * z)
        .sum();
    Ok(num / den)
}

/// Nadaraya-Watson estimator adjusted for censoring only: both sums carry
/// the inverse-censoring weight `Ḡ_n⁻¹` but no truncation guard.
pub fn adjusted_nw_m_hat<T: Real>(
    sample: &LtrcSample<T>,
    fit: &SurvivalFit<T>,
    cfg: &EstimatorConfig<T>,
    x: &[T],
) -> Result<T> {
    let mut num = T::zero();
    let mut den = T::zero();
    for obs in sample.observations() {
        if !obs.delta {
            continue;
        }
        let gbar = fit.g_bar_n.eval(obs.z);
        if gbar == T::zero() {
            continue;
        }
        let k = cfg.kernel.eval_scaled(&obs.x, x, cfg.bandwidth);
        num += k * obs.z / gbar;
        den += k / gbar;
    }
    if den == T::zero() {
        return Err(LtrcError::NoEffectiveData);
    }
    Ok(num / den)
}

/// Carbonez comparator: inverse-censoring weights in the numerator only,
/// plain kernel sum in the denominator.
pub fn carbonez_m_hat<T: Real>(
    sample: &LtrcSample<T>,
    fit: &SurvivalFit<T>,
    cfg: &EstimatorConfig<T>,
    x: &[T],
) -> Result<T> {
    let mut num = T::zero();
    let mut den = T::zero();
    for obs in sample.observations() {
        let k = cfg.kernel.eval_scaled(&obs.x, x, cfg.bandwidth);
        den += k;
        if obs.delta {
            let gbar = fit.g_bar_n.eval(obs.z);
            if gbar > T::zero() {
                num += k * obs.z / gbar;
            }
        }
    }
    if den == T::zero() {
        return Err(LtrcError::NoEffectiveData);
    }
    Ok(num / den)
}

/// Plug-in score derivative `∂Ψ̂/∂θ = −Σ_i w_i ψ′(Z_i − θ)`.
pub fn estimate_score_derivative<T: Real>(
    sample: &LtrcSample<T>,
    fit: &SurvivalFit<T>,
    cfg: &EstimatorConfig<T>,
    x: &[T],
    theta: T,
) -> Result<T> {
    let score = build_score(sample, fit, cfg, x)?;
    Ok(score
        .weights
        .iter()
        .zip(&score.responses)
        .map(|(&w, &z)| -(w * cfg.psi.deriv(z - theta)))
        .sum())
}

/// Plug-in second-moment term
/// `Γ̂(x, θ) = μ_n/(n hⁿ) Σ_i K((x − X_i)/h) δ_i ψ²(Z_i − θ) / (L_n² Ḡ_n²)`.
pub fn estimate_gamma<T: Real>(
    sample: &LtrcSample<T>,
    fit: &SurvivalFit<T>,
    cfg: &EstimatorConfig<T>,
    x: &[T],
    theta: T,
) -> Result<T> {
    let bound = resolved_bound(sample, cfg);
    let n = T::from_usize(sample.n()).unwrap();
    let hd = bandwidth_power(cfg, sample.dim());

    let mut acc = T::zero();
    let mut any = false;
    for obs in sample.observations() {
        if !obs.delta || obs.z > bound {
            continue;
        }
        let guard = fit.l_n.eval(obs.z) * fit.g_bar_n.eval(obs.z);
        if guard == T::zero() {
            continue;
        }
        let k = cfg.kernel.eval_scaled(&obs.x, x, cfg.bandwidth);
        if k == T::zero() {
            continue;
        }
        let psi = cfg.psi.eval(obs.z - theta);
        acc += k * psi * psi / (guard * guard);
        any = true;
    }
    if !any {
        return Err(LtrcError::NoEffectiveData);
    }
    Ok(fit.mu_n * acc / (n * hd))
}

/// Plug-in standard deviation `σ̂ = √(μ_n Γ̂ κ) / |∂Ψ̂/∂θ|` evaluated at
/// `θ = m̂(x)`, with `κ = ∫K²` analytic for the built-in kernels.
pub fn estimate_sigma<T: Real>(
    sample: &LtrcSample<T>,
    fit: &SurvivalFit<T>,
    cfg: &EstimatorConfig<T>,
    x: &[T],
    m_hat: T,
) -> Result<T> {
    let deriv = estimate_score_derivative(sample, fit, cfg, x, m_hat)?;
    if deriv == T::zero() {
        return Err(LtrcError::DegenerateDerivative);
    }
    let gamma = estimate_gamma(sample, fit, cfg, x, m_hat)?;
    let kappa = cfg.kernel.square_integral(sample.dim());
    Ok((fit.mu_n * gamma * kappa).sqrt() / deriv.abs())
}

/// Symmetric asymptotic confidence interval
/// `m̂ ± t_{1−η/2} σ̂ / √(n hⁿ)`.
pub fn confidence_interval<T: Real>(
    m_hat: T,
    sigma_hat: T,
    eta: T,
    n: usize,
    cfg: &EstimatorConfig<T>,
    dim: usize,
) -> (T, T) {
    let q = T::of(normal_quantile(1.0 - eta.as_f64() / 2.0));
    let scale = (T::from_usize(n).unwrap() * bandwidth_power(cfg, dim)).sqrt();
    let half = q * sigma_hat / scale;
    (m_hat - half, m_hat + half)
}

/// Oracle pseudo-score `Ψ̃`: the same weighted score with the true guard
/// functions and true `μ` in place of their estimates. Simulation use only.
pub fn oracle_score<T: Real>(
    sample: &LtrcSample<T>,
    cfg: &EstimatorConfig<T>,
    x: &[T],
    theta: T,
    true_mu: T,
    true_l: impl Fn(T) -> T,
    true_gbar: impl Fn(T) -> T,
) -> T {
    let n = T::from_usize(sample.n()).unwrap();
    let hd = bandwidth_power(cfg, sample.dim());
    let mut acc = T::zero();
    for obs in sample.observations() {
        if !obs.delta {
            continue;
        }
        let guard = true_l(obs.z) * true_gbar(obs.z);
        if guard <= T::zero() {
            continue;
        }
        let k = cfg.kernel.eval_scaled(&obs.x, x, cfg.bandwidth);
        acc += k * cfg.psi.eval(obs.z - theta) / guard;
    }
    true_mu * acc / (n * hd)
}

/// Least-squares cross-validation over a bandwidth grid.
///
/// The criterion is the leave-one-out weighted prediction error
/// `CV(h) = Σ_i δ_i (Z_i − m̂_{−i}(X_i))² / (L_n(Z_i) Ḡ_n(Z_i))`,
/// with the guard fits held fixed across folds. Ties break toward the
/// smaller bandwidth.
pub fn lscv_bandwidth<T: Real>(
    sample: &LtrcSample<T>,
    fit: &SurvivalFit<T>,
    cfg_template: &EstimatorConfig<T>,
    grid: &[T],
) -> Result<T> {
    if grid.is_empty() {
        return Err(LtrcError::InvalidConfig("empty bandwidth grid".into()));
    }
    let bound = resolved_bound(sample, cfg_template);

    // Fold candidates and their synthetic-data weights.
    let mut folds: Vec<(usize, T)> = Vec::new();
    for (i, obs) in sample.observations().iter().enumerate() {
        if !obs.delta || obs.z > bound {
            continue;
        }
        let guard = fit.l_n.eval(obs.z) * fit.g_bar_n.eval(obs.z);
        if guard > T::zero() {
            folds.push((i, T::one() / guard));
        }
    }
    if folds.len() < 2 {
        return Err(LtrcError::NoEffectiveData);
    }

    let mut candidates: Vec<T> = grid.to_vec();
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();

    let mut best: Option<(T, T)> = None;
    for &h in &candidates {
        if !(h > T::zero()) {
            return Err(LtrcError::InvalidConfig(
                "bandwidth candidates must be positive".into(),
            ));
        }
        let cfg_h = cfg_template.with_bandwidth(h);
        let mut cv = T::zero();
        let mut used = 0usize;
        for &(i, w) in &folds {
            let obs = sample.obs(i);
            let Ok(score) = build_score_excluding(sample, fit, &cfg_h, &obs.x, Some(i)) else {
                continue;
            };
            let Ok(sol) = solve_m_hat(&score, &cfg_h) else {
                continue;
            };
            let resid = obs.z - sol.root;
            cv += w * resid * resid;
            used += 1;
        }
        if used == 0 {
            continue;
        }
        if best.is_none_or(|(_, best_cv)| cv < best_cv) {
            best = Some((h, cv));
        }
    }
    best.map(|(h, _)| h).ok_or(LtrcError::NoEffectiveData)
}

/// Full point estimate: score, root, plug-in σ̂ and confidence interval.
///
/// A point is estimable only when the kept count reaches `min(5, n)`: the
/// hard floor keeps reported estimates inside the covariate support while
/// leaving degenerate single-record samples usable.
pub fn estimate_at<T: Real>(
    sample: &LtrcSample<T>,
    fit: &SurvivalFit<T>,
    cfg: &EstimatorConfig<T>,
    x: &[T],
    eta: T,
) -> Result<EstimateResult<T>> {
    let score = build_score(sample, fit, cfg, x)?;
    let needed = sample.n().min(5);
    if score.n_effective() < needed {
        return Err(LtrcError::NotEstimable {
            needed,
            got: score.n_effective(),
        });
    }
    let sol = solve_m_hat(&score, cfg)?;
    let sigma_hat = estimate_sigma(sample, fit, cfg, x, sol.root)?;
    let (ci_lo, ci_hi) =
        confidence_interval(sol.root, sigma_hat, eta, sample.n(), cfg, sample.dim());
    Ok(EstimateResult {
        m_hat: sol.root,
        sigma_hat,
        ci_lo,
        ci_hi,
        n_effective: score.n_effective(),
        iterations: sol.iterations,
        bracket: sol.bracket,
    })
}

/// Point-by-point estimation over a covariate grid (`d = 1`).
pub fn estimate_grid<T: Real>(
    sample: &LtrcSample<T>,
    fit: &SurvivalFit<T>,
    cfg: &EstimatorConfig<T>,
    xs: &[T],
    eta: T,
) -> Vec<(T, Result<EstimateResult<T>>)> {
    xs.iter()
        .map(|&x| (x, estimate_at(sample, fit, cfg, &[x], eta)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Kernel, Psi};
    use crate::sample::LtrcObservation;

    fn sample(x: &[f64], t: &[f64], z: &[f64], delta: &[bool]) -> LtrcSample<f64> {
        let raw = x
            .iter()
            .zip(t)
            .zip(z)
            .zip(delta)
            .map(|(((&x, &t), &z), &d)| LtrcObservation::scalar(x, z, t, d))
            .collect();
        LtrcSample::validate(raw).unwrap()
    }

    fn fitted(s: &LtrcSample<f64>) -> SurvivalFit<f64> {
        SurvivalFit::fit(s).unwrap()
    }

    fn cfg(h: f64) -> EstimatorConfig<f64> {
        EstimatorConfig::gaussian_pseudo_huber(h).unwrap()
    }

    #[test]
    fn single_observation_weight_formula() {
        let s = sample(&[0.3], &[-1.0], &[2.0], &[true]);
        let fit = fitted(&s);
        let c = cfg(0.7);
        let score = build_score(&s, &fit, &c, &[0.3]).unwrap();
        assert_eq!(score.n_effective(), 1);
        let expect = fit.mu_n * Kernel::Gaussian.eval_1d(0.0) / 0.7;
        assert!((score.weights[0] - expect).abs() < 1e-15);
        assert!(score.weights[0] > 0.0);
    }

    #[test]
    fn all_censored_is_no_effective_data() {
        let s = sample(&[0.0, 0.1], &[0.0, 0.0], &[1.0, 2.0], &[false, false]);
        let fit = fitted(&s);
        assert!(matches!(
            build_score(&s, &fit, &cfg(1.0), &[0.0]),
            Err(LtrcError::NoEffectiveData)
        ));
    }

    #[test]
    fn degenerate_sample_weights_reduce_to_kernel_over_nh() {
        let s = sample(
            &[0.0, 0.5, 1.0],
            &[-1.0, -1.0, -1.0],
            &[1.0, 2.0, 3.0],
            &[true, true, true],
        );
        let fit = fitted(&s);
        let c = cfg(0.8);
        let score = build_score(&s, &fit, &c, &[0.25]).unwrap();
        for (&w, (&i, &z)) in score
            .weights
            .iter()
            .zip(score.kept_idx.iter().zip(&score.responses))
        {
            // Guards and μ_n are all one here except Ḡ_n at the largest
            // lifetime, which never reaches zero because nothing is censored.
            let k = Kernel::Gaussian.eval_1d((0.25 - s.obs(i).x[0]) / 0.8);
            assert!((w - k / (3.0 * 0.8)).abs() < 1e-15, "z = {z}");
        }
    }

    #[test]
    fn score_zero_at_single_response() {
        let s = sample(&[0.0], &[-1.0], &[1.5], &[true]);
        let fit = fitted(&s);
        let c = cfg(1.0);
        let score = build_score(&s, &fit, &c, &[0.0]).unwrap();
        assert_eq!(score_value(&score, &c, 1.5), 0.0);
        assert!(score_value(&score, &c, 0.0) > 0.0);
        assert!(score_value(&score, &c, 3.0) < 0.0);
    }

    #[test]
    fn identity_score_is_affine() {
        let s = sample(&[0.0, 0.2], &[-1.0, -1.0], &[1.0, 2.0], &[true, true]);
        let fit = fitted(&s);
        let mut c = cfg(1.0);
        c.psi = Psi::identity();
        let score = build_score(&s, &fit, &c, &[0.1]).unwrap();
        let w_sum: f64 = score.weights.iter().sum();
        let wz_sum: f64 = score
            .weights
            .iter()
            .zip(&score.responses)
            .map(|(w, z)| w * z)
            .sum();
        for theta in [-1.0, 0.0, 0.7, 2.5] {
            let expect = wz_sum - theta * w_sum;
            assert!((score_value(&score, &c, theta) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn solver_is_exact_on_single_observation() {
        let s = sample(&[0.0], &[-1.0], &[1.5], &[true]);
        let fit = fitted(&s);
        for psi in [Psi::identity(), Psi::pseudo_huber()] {
            let mut c = cfg(1.0);
            c.psi = psi;
            let score = build_score(&s, &fit, &c, &[0.0]).unwrap();
            let sol = solve_m_hat(&score, &c).unwrap();
            assert_eq!(sol.root, 1.5);
        }
    }

    #[test]
    fn solver_matches_closed_form_under_identity_psi() {
        let s = sample(
            &[0.0, 0.4, 0.9, 1.3],
            &[-1.0, 0.1, 0.0, 0.2],
            &[1.0, 2.0, 1.4, 3.0],
            &[true, true, false, true],
        );
        let fit = fitted(&s);
        let mut c = cfg(0.6);
        c.psi = Psi::identity();
        let score = build_score(&s, &fit, &c, &[0.5]).unwrap();
        let sol = solve_m_hat(&score, &c).unwrap();
        let closed = classical_m_hat(&s, &fit, &c, &[0.5]).unwrap();
        assert!((sol.root - closed).abs() < 1e-8);
    }

    #[test]
    fn solver_independent_of_bracket_pad() {
        let s = sample(
            &[0.0, 0.4, 0.9],
            &[-1.0, -1.0, -1.0],
            &[1.0, 2.0, 1.4],
            &[true, true, true],
        );
        let fit = fitted(&s);
        let mut roots = Vec::new();
        for pad in [0.5, 1.0, 5.0] {
            let mut c = cfg(0.6);
            c.bracket_pad = pad;
            let score = build_score(&s, &fit, &c, &[0.5]).unwrap();
            roots.push(solve_m_hat(&score, &c).unwrap().root);
        }
        for w in roots.windows(2) {
            assert!((w[0] - w[1]).abs() <= 1e-10);
        }
    }

    #[test]
    fn classical_single_observation() {
        let s = sample(&[0.0], &[-1.0], &[2.5], &[true]);
        let fit = fitted(&s);
        assert_eq!(classical_m_hat(&s, &fit, &cfg(1.0), &[0.0]).unwrap(), 2.5);
    }

    #[test]
    fn classical_equal_weights_is_mean() {
        // All covariates at the evaluation point and unit guards: the kernel
        // values coincide, so the estimate is the plain mean of lifetimes.
        let s = sample(
            &[0.5, 0.5, 0.5],
            &[-1.0, -1.0, -1.0],
            &[1.0, 2.0, 4.0],
            &[true, true, true],
        );
        let fit = fitted(&s);
        let got = classical_m_hat(&s, &fit, &cfg(1.0), &[0.5]).unwrap();
        assert!((got - 7.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn carbonez_hand_evaluation() {
        let s = sample(
            &[0.0, 0.5, 1.0],
            &[-1.0, -1.0, -1.0],
            &[1.0, 2.0, 3.0],
            &[true, true, false],
        );
        let fit = fitted(&s);
        let c = cfg(0.9);
        let x = 0.25;
        let k: Vec<f64> = (0..3)
            .map(|i| Kernel::Gaussian.eval_1d((x - s.obs(i).x[0]) / 0.9))
            .collect();
        // Censored observation contributes to the denominator only; guards
        // Ḡ_n(1) = Ḡ_n(2) = 1 because the single censored time is largest.
        let expect = (k[0] * 1.0 + k[1] * 2.0) / (k[0] + k[1] + k[2]);
        let got = carbonez_m_hat(&s, &fit, &c, &[x]).unwrap();
        assert!((got - expect).abs() < 1e-14);
    }

    #[test]
    fn carbonez_reduces_to_nadaraya_watson_without_censoring() {
        let s = sample(
            &[0.0, 0.5, 1.0],
            &[-1.0, -1.0, -1.0],
            &[1.0, 2.0, 3.0],
            &[true, true, true],
        );
        let fit = fitted(&s);
        let c = cfg(0.9);
        let x = [0.3];
        let k: Vec<f64> = (0..3)
            .map(|i| Kernel::Gaussian.eval_1d((x[0] - s.obs(i).x[0]) / 0.9))
            .collect();
        let nw = (k[0] * 1.0 + k[1] * 2.0 + k[2] * 3.0) / (k[0] + k[1] + k[2]);
        assert!((carbonez_m_hat(&s, &fit, &c, &x).unwrap() - nw).abs() < 1e-14);
        assert!((adjusted_nw_m_hat(&s, &fit, &c, &x).unwrap() - nw).abs() < 1e-14);
    }

    #[test]
    fn derivative_under_identity_is_negative_weight_sum() {
        let s = sample(&[0.0, 0.4], &[-1.0, -1.0], &[1.0, 2.0], &[true, true]);
        let fit = fitted(&s);
        let mut c = cfg(0.7);
        c.psi = Psi::identity();
        let score = build_score(&s, &fit, &c, &[0.2]).unwrap();
        let w_sum: f64 = score.weights.iter().sum();
        let d = estimate_score_derivative(&s, &fit, &c, &[0.2], 0.9).unwrap();
        assert!((d + w_sum).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let s = sample(
            &[0.0, 0.4, 0.9, 1.3],
            &[-1.0, 0.1, 0.0, 0.2],
            &[1.0, 2.0, 1.4, 3.0],
            &[true, true, true, true],
        );
        let fit = fitted(&s);
        let c = cfg(0.6);
        let x = [0.5];
        let theta = 1.3;
        let score = build_score(&s, &fit, &c, &x).unwrap();
        let eps = 1e-5;
        let fd = (score_value(&score, &c, theta + eps) - score_value(&score, &c, theta - eps))
            / (2.0 * eps);
        let d = estimate_score_derivative(&s, &fit, &c, &x, theta).unwrap();
        assert!((d - fd).abs() < 1e-6, "analytic {d} vs fd {fd}");
    }

    #[test]
    fn derivative_single_observation_at_its_response() {
        let s = sample(&[0.0], &[-1.0], &[1.5], &[true]);
        let fit = fitted(&s);
        let c = cfg(1.0);
        let score = build_score(&s, &fit, &c, &[0.0]).unwrap();
        let d = estimate_score_derivative(&s, &fit, &c, &[0.0], 1.5).unwrap();
        // ψ′(0) = 1 for the pseudo-Huber objective.
        assert!((d + score.weights[0]).abs() < 1e-15);
    }

    #[test]
    fn gamma_zero_at_interpolating_theta_and_nonnegative() {
        let s = sample(&[0.0], &[-1.0], &[1.5], &[true]);
        let fit = fitted(&s);
        let c = cfg(1.0);
        assert_eq!(estimate_gamma(&s, &fit, &c, &[0.0], 1.5).unwrap(), 0.0);
        assert!(estimate_gamma(&s, &fit, &c, &[0.0], 0.3).unwrap() >= 0.0);
    }

    #[test]
    fn gamma_hand_evaluation() {
        let s = sample(
            &[0.0, 0.5, 1.0],
            &[-1.0, -1.0, -1.0],
            &[1.0, 2.0, 3.0],
            &[true, true, false],
        );
        let fit = fitted(&s);
        let c = cfg(1.0);
        let (x, theta) = (0.25, 1.2);
        let psi = Psi::<f64>::pseudo_huber();
        // Unit guards for the two uncensored records; μ_n = 1.
        let expect = (Kernel::Gaussian.eval_1d(x - 0.0) * psi.eval(1.0 - theta).powi(2)
            + Kernel::Gaussian.eval_1d(x - 0.5) * psi.eval(2.0 - theta).powi(2))
            / 3.0;
        let got = estimate_gamma(&s, &fit, &c, &[x], theta).unwrap();
        assert!((got - expect).abs() < 1e-14);
    }

    #[test]
    fn sigma_zero_when_theta_interpolates_single_observation() {
        let s = sample(&[0.0], &[-1.0], &[1.5], &[true]);
        let fit = fitted(&s);
        let c = cfg(1.0);
        assert_eq!(estimate_sigma(&s, &fit, &c, &[0.0], 1.5).unwrap(), 0.0);
    }

    #[test]
    fn sigma_and_root_invariant_under_psi_rescaling() {
        let s = sample(
            &[0.0, 0.4, 0.9, 1.3],
            &[-1.0, 0.1, 0.0, 0.2],
            &[1.0, 2.0, 1.4, 3.0],
            &[true, true, true, true],
        );
        let fit = fitted(&s);
        let x = [0.5];
        let base = cfg(0.6);
        let mut scaled = base.clone();
        scaled.psi = Psi::pseudo_huber().scaled(7.0);

        let r1 = solve_m_hat(&build_score(&s, &fit, &base, &x).unwrap(), &base)
            .unwrap()
            .root;
        let r2 = solve_m_hat(&build_score(&s, &fit, &scaled, &x).unwrap(), &scaled)
            .unwrap()
            .root;
        assert!((r1 - r2).abs() < 1e-10);

        let s1 = estimate_sigma(&s, &fit, &base, &x, r1).unwrap();
        let s2 = estimate_sigma(&s, &fit, &scaled, &x, r1).unwrap();
        assert!(
            (s1 - s2).abs() < 1e-12,
            "sigma changed under rescaling: {s1} vs {s2}"
        );
    }

    #[test]
    fn confidence_interval_width_formula() {
        let c = cfg(0.8);
        let (lo, hi) = confidence_interval(1.0, 0.5, 0.05, 200, &c, 1);
        let half = 1.959963985 * 0.5 / (200.0f64 * 0.8).sqrt();
        assert!((hi - lo - 2.0 * half).abs() < 1e-6);
        assert!((lo + hi) / 2.0 - 1.0 < 1e-12);

        let (lo0, hi0) = confidence_interval(1.0, 0.0, 0.05, 200, &c, 1);
        assert_eq!((lo0, hi0), (1.0, 1.0));
    }

    #[test]
    fn oracle_score_with_unit_guards_equals_plugin_on_degenerate_sample() {
        let s = sample(
            &[0.0, 0.5, 1.0],
            &[-1.0, -1.0, -1.0],
            &[1.0, 2.0, 3.0],
            &[true, true, true],
        );
        let fit = fitted(&s);
        let c = cfg(0.8);
        for theta in [0.0, 1.1, 2.7] {
            let score = build_score(&s, &fit, &c, &[0.4]).unwrap();
            let plug = score_value(&score, &c, theta);
            let oracle = oracle_score(&s, &c, &[0.4], theta, 1.0, |_| 1.0, |_| 1.0);
            assert!((plug - oracle).abs() < 1e-13);
        }
    }

    #[test]
    fn oracle_score_zero_at_single_response() {
        let s = sample(&[0.0], &[-1.0], &[1.5], &[true]);
        let c = cfg(1.0);
        let v = oracle_score(
            &s,
            &c,
            &[0.0],
            1.5,
            0.7,
            |y| 0.5 + 0.1 * y.abs().min(1.0),
            |_| 0.9,
        );
        assert_eq!(v, 0.0);
    }

    #[test]
    fn lscv_single_candidate_returns_it() {
        let s = sample(
            &[0.0, 0.4, 0.9, 1.3],
            &[-1.0, -1.0, -1.0, -1.0],
            &[1.0, 2.0, 1.4, 3.0],
            &[true, true, true, true],
        );
        let fit = fitted(&s);
        assert_eq!(lscv_bandwidth(&s, &fit, &cfg(1.0), &[0.37]).unwrap(), 0.37);
    }

    #[test]
    fn estimate_at_enforces_effective_floor() {
        let s = sample(
            &[0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            &[-1.0; 6],
            &[1.0, 1.1, 1.2, 1.3, 1.4, 1.5],
            &[true, true, true, true, false, false],
        );
        let fit = fitted(&s);
        match estimate_at(&s, &fit, &cfg(0.5), &[0.2], 0.05) {
            Err(LtrcError::NotEstimable { needed: 5, got: 4 }) => {}
            other => panic!("expected NotEstimable, got {other:?}"),
        }
    }

    #[test]
    fn estimate_at_single_record_sample() {
        let s = sample(&[0.0], &[-1.0], &[2.0], &[true]);
        let fit = fitted(&s);
        let r = estimate_at(&s, &fit, &cfg(1.0), &[0.0], 0.05).unwrap();
        assert_eq!(r.m_hat, 2.0);
        assert_eq!(r.sigma_hat, 0.0);
        assert_eq!((r.ci_lo, r.ci_hi), (2.0, 2.0));
        assert_eq!(r.n_effective, 1);
    }

    #[test]
    fn product_kernel_weights_in_two_dimensions() {
        let raw = vec![
            LtrcObservation {
                x: vec![0.0, 0.0],
                z: 1.0,
                t: -1.0,
                delta: true,
            },
            LtrcObservation {
                x: vec![0.5, -0.5],
                z: 2.0,
                t: -1.0,
                delta: true,
            },
            LtrcObservation {
                x: vec![1.0, 1.0],
                z: 3.0,
                t: -1.0,
                delta: true,
            },
        ];
        let s = LtrcSample::validate(raw).unwrap();
        let fit = fitted(&s);
        let c = cfg(0.8);
        let x = [0.25, 0.1];
        let score = build_score(&s, &fit, &c, &x).unwrap();
        for (&w, &i) in score.weights.iter().zip(&score.kept_idx) {
            let obs = s.obs(i);
            let k = Kernel::Gaussian.eval_1d((x[0] - obs.x[0]) / 0.8)
                * Kernel::Gaussian.eval_1d((x[1] - obs.x[1]) / 0.8);
            // Guards are one; h^d = 0.64 for d = 2.
            assert!((w - k / (3.0 * 0.64)).abs() < 1e-15);
        }
        let sol = solve_m_hat(&score, &c).unwrap();
        assert!(sol.root > 1.0 && sol.root < 3.0);
    }

    #[test]
    fn translation_equivariance_with_frozen_guards() {
        let s = sample(
            &[0.0, 0.4, 0.9, 1.3],
            &[-1.0, 0.1, 0.0, 0.2],
            &[1.0, 2.0, 1.4, 3.0],
            &[true, true, true, true],
        );
        let fit = fitted(&s);
        let c = cfg(0.6);
        let score = build_score(&s, &fit, &c, &[0.5]).unwrap();
        let shift = 2.75;
        let shifted = WeightedScore {
            eval_point: score.eval_point.clone(),
            kept_idx: score.kept_idx.clone(),
            weights: score.weights.clone(),
            responses: score.responses.iter().map(|z| z + shift).collect(),
        };
        let r0 = solve_m_hat(&score, &c).unwrap().root;
        let r1 = solve_m_hat(&shifted, &c).unwrap().root;
        assert!((r1 - (r0 + shift)).abs() <= 1e-10);
    }
}
