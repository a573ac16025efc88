//! Product-limit estimators for LTRC data.
//!
//! Given the observed sample, this module fits every distribution-function
//! estimator used downstream: the empirical d.f.'s of `Z` and `T`, the
//! Lynden-Bell estimators `H_n` (of the d.f. of `Z`) and `L_n` (of the
//! truncation d.f.), the TJW product-limit estimators `F_n` (lifetime) and
//! `G_n` (censoring), the cumulative hazard `Λ_n`, and the truncation
//! probability `μ_n`.
//!
//! All product-limit factors share the risk-set proportion
//! `C_n(y) = n⁻¹ Σ 1{T_j ≤ y ≤ Z_j}` as denominator. `F_n`, `G_n` and `H_n`
//! are accumulated in one pass so that the survival identity
//! `1 − H_n = (1 − F_n)(1 − G_n)` holds exactly, factor by factor; the raw
//! survival products are kept alongside the distribution functions because
//! the weight guards downstream must see an exact zero when a product-limit
//! factor vanishes.

use crate::error::{LtrcError, Result};
use crate::sample::LtrcSample;
use crate::scalar::Real;
use crate::step::StepFunction;

/// All distribution-function estimators fitted from one sample.
///
/// The risk-set proportion `C_n` is not carried as a step function: it is
/// neither right- nor left-continuous (it rises at truncation times and
/// falls just after lifetimes), so it is evaluated on demand through
/// [`LtrcSample::risk_fraction`].
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalFit<T> {
    /// Empirical d.f. of the observed lifetimes `Z`.
    pub h_n_emp: StepFunction<T>,
    /// Empirical d.f. of the truncation times `T`.
    pub l_n_emp: StepFunction<T>,
    /// Lynden-Bell estimator of the d.f. of `Z`.
    pub h_n_lb: StepFunction<T>,
    /// TJW product-limit estimator of the lifetime d.f. `F`.
    pub f_n: StepFunction<T>,
    /// Concomitant TJW estimator of the censoring d.f. `G`.
    pub g_n: StepFunction<T>,
    /// Lynden-Bell estimator of the truncation d.f. `L`.
    pub l_n: StepFunction<T>,
    /// Cumulative hazard estimator.
    pub lambda_n: StepFunction<T>,
    /// Survival complement `1 − F_n` as the raw product.
    pub f_bar_n: StepFunction<T>,
    /// Survival complement `1 − G_n` as the raw product.
    pub g_bar_n: StepFunction<T>,
    /// Survival complement `1 − H_n`, accumulated as `f_bar · g_bar`.
    pub h_bar_n: StepFunction<T>,
    /// He–Yang estimate of the truncation probability `μ = P(T ≤ Z)`.
    pub mu_n: T,
}

impl<T: Real> SurvivalFit<T> {
    /// Fits every estimator and the truncation probability.
    ///
    /// Fails with [`LtrcError::InvarianceViolation`] when the per-point
    /// evaluations of `μ_n` disagree, which happens for tied lifetimes (a
    /// null event under the continuous model).
    pub fn fit(sample: &LtrcSample<T>) -> Result<Self> {
        let pl = product_limit_pass(sample);
        let (h_n_emp, l_n_emp) = fit_empirical_cdfs(sample);
        let l_n = fit_lynden_bell_l(sample);

        let mut fit = Self {
            h_n_emp,
            l_n_emp,
            h_n_lb: pl.h_n,
            f_n: pl.f_n,
            g_n: pl.g_n,
            l_n,
            lambda_n: pl.lambda_n,
            f_bar_n: pl.f_bar,
            g_bar_n: pl.g_bar,
            h_bar_n: pl.h_bar,
            mu_n: T::zero(),
        };
        fit.assert_shape();
        fit.mu_n = default_mu(sample, &fit)?;
        Ok(fit)
    }

    fn assert_shape(&self) {
        for (name, f) in [
            ("h_n_emp", &self.h_n_emp),
            ("l_n_emp", &self.l_n_emp),
            ("h_n_lb", &self.h_n_lb),
            ("f_n", &self.f_n),
            ("g_n", &self.g_n),
            ("l_n", &self.l_n),
        ] {
            assert!(f.is_nondecreasing(), "{name} must be nondecreasing");
            assert!(f.within_unit_interval(), "{name} must stay in [0,1]");
        }
        assert!(
            self.lambda_n.is_nondecreasing(),
            "lambda_n must be nondecreasing"
        );
        assert!(
            self.lambda_n.floor() >= T::zero()
                && self.lambda_n.values().iter().all(|&v| v >= T::zero()),
            "lambda_n must be nonnegative"
        );
    }
}

struct ProductLimit<T> {
    f_n: StepFunction<T>,
    g_n: StepFunction<T>,
    h_n: StepFunction<T>,
    lambda_n: StepFunction<T>,
    f_bar: StepFunction<T>,
    g_bar: StepFunction<T>,
    h_bar: StepFunction<T>,
}

/// One pass over the lifetimes in sorted order, ties processed in input
/// order exactly as the product formulas are written.
fn product_limit_pass<T: Real>(sample: &LtrcSample<T>) -> ProductLimit<T> {
    let order = sample.z_sorted_idx();
    let mut sf = T::one();
    let mut sg = T::one();
    let mut lam = T::zero();

    let mut f_jumps = Vec::new();
    let mut f_values = Vec::new();
    let mut g_jumps = Vec::new();
    let mut g_values = Vec::new();
    let mut h_jumps = Vec::new();
    let mut h_values = Vec::new();
    let mut lam_jumps = Vec::new();
    let mut lam_values = Vec::new();
    let mut f_bar_values = Vec::new();
    let mut g_bar_values = Vec::new();
    let mut h_bar_values = Vec::new();

    let mut k = 0;
    while k < order.len() {
        let z = sample.obs(order[k]).z;
        // Shared denominator n·C_n(z) for the whole tie group.
        let at_risk = T::from_usize(sample.count_risk_set(z)).unwrap();
        let factor = T::one() - T::one() / at_risk;

        let mut any_uncensored = false;
        let mut any_censored = false;
        while k < order.len() && sample.obs(order[k]).z == z {
            if sample.obs(order[k]).delta {
                sf *= factor;
                lam += T::one() / at_risk;
                any_uncensored = true;
            } else {
                sg *= factor;
                any_censored = true;
            }
            k += 1;
        }

        let sh = sf * sg;
        h_jumps.push(z);
        h_values.push(T::one() - sh);
        h_bar_values.push(sh);
        if any_uncensored {
            f_jumps.push(z);
            f_values.push(T::one() - sf);
            f_bar_values.push(sf);
            lam_jumps.push(z);
            lam_values.push(lam);
        }
        if any_censored {
            g_jumps.push(z);
            g_values.push(T::one() - sg);
            g_bar_values.push(sg);
        }
    }

    let step = |floor: T, jumps: Vec<T>, values: Vec<T>| {
        StepFunction::new(floor, jumps, values).expect("sorted pass yields valid step function")
    };
    ProductLimit {
        f_n: step(T::zero(), f_jumps.clone(), f_values),
        g_n: step(T::zero(), g_jumps.clone(), g_values),
        h_n: step(T::zero(), h_jumps.clone(), h_values),
        lambda_n: step(T::zero(), lam_jumps, lam_values),
        f_bar: step(T::one(), f_jumps, f_bar_values),
        g_bar: step(T::one(), g_jumps, g_bar_values),
        h_bar: step(T::one(), h_jumps, h_bar_values),
    }
}

/// Empirical distribution functions of `Z` and `T`.
pub fn fit_empirical_cdfs<T: Real>(sample: &LtrcSample<T>) -> (StepFunction<T>, StepFunction<T>) {
    let n = T::from_usize(sample.n()).unwrap();
    let ecdf = |order: &[usize], value_of: &dyn Fn(usize) -> T| {
        let mut jumps: Vec<T> = Vec::new();
        let mut values: Vec<T> = Vec::new();
        for (rank, &i) in order.iter().enumerate() {
            let v = value_of(i);
            let cum = T::from_usize(rank + 1).unwrap() / n;
            if jumps.last() == Some(&v) {
                *values.last_mut().unwrap() = cum;
            } else {
                jumps.push(v);
                values.push(cum);
            }
        }
        StepFunction::new(T::zero(), jumps, values).expect("ecdf is a valid step function")
    };
    let h = ecdf(sample.z_sorted_idx(), &|i| sample.obs(i).z);
    let l = ecdf(sample.t_sorted_idx(), &|i| sample.obs(i).t);
    (h, l)
}

/// TJW product-limit estimator of the lifetime d.f.; jumps only at
/// uncensored lifetimes.
pub fn fit_tjw_f<T: Real>(sample: &LtrcSample<T>) -> StepFunction<T> {
    product_limit_pass(sample).f_n
}

/// Concomitant TJW estimator of the censoring d.f.; jumps only at censored
/// lifetimes.
pub fn fit_tjw_g<T: Real>(sample: &LtrcSample<T>) -> StepFunction<T> {
    product_limit_pass(sample).g_n
}

/// Lynden-Bell estimator of the d.f. of `Z`; jumps at every lifetime.
pub fn fit_lynden_bell_h<T: Real>(sample: &LtrcSample<T>) -> StepFunction<T> {
    product_limit_pass(sample).h_n
}

/// Cumulative hazard estimator `Λ_n(y) = n⁻¹ Σ 1{Z_i ≤ y, δ_i = 1}/C_n(Z_i)`.
pub fn fit_cumulative_hazard<T: Real>(sample: &LtrcSample<T>) -> StepFunction<T> {
    product_limit_pass(sample).lambda_n
}

/// Lynden-Bell estimator of the truncation d.f.,
/// `L_n(y) = ∏_{i: T_i > y} (1 − 1/(n C_n(T_i)))`.
pub fn fit_lynden_bell_l<T: Real>(sample: &LtrcSample<T>) -> StepFunction<T> {
    let order = sample.t_sorted_idx();

    // Factor product per distinct truncation value.
    let mut distinct: Vec<T> = Vec::new();
    let mut group_factor: Vec<T> = Vec::new();
    let mut k = 0;
    while k < order.len() {
        let t = sample.obs(order[k]).t;
        let at_risk = T::from_usize(sample.count_risk_set(t)).unwrap();
        let factor = T::one() - T::one() / at_risk;
        let mut acc = T::one();
        while k < order.len() && sample.obs(order[k]).t == t {
            acc *= factor;
            k += 1;
        }
        distinct.push(t);
        group_factor.push(acc);
    }

    // Suffix products: the value on [v_j, v_{j+1}) multiplies every factor
    // strictly above v_j.
    let m = distinct.len();
    let mut values = vec![T::one(); m];
    for j in (0..m.saturating_sub(1)).rev() {
        values[j] = group_factor[j + 1] * values[j + 1];
    }
    let floor = group_factor[0] * values[0];
    StepFunction::new(floor, distinct, values).expect("valid step function")
}

/// He–Yang truncation-probability estimate at a single evaluation point:
/// `μ_n(y) = L_n(y) (1 − H_n(y⁻)) / C_n(y)`.
///
/// The left limit of the Lynden-Bell `H_n` restores exact invariance across
/// evaluation points at the atoms; the right-continuous value would not.
/// The returned value is the raw ratio, never silently clamped to `[0, 1]`.
pub fn estimate_mu<T: Real>(sample: &LtrcSample<T>, fit: &SurvivalFit<T>, y: T) -> Result<T> {
    let c = sample.risk_fraction(y);
    if c == T::zero() {
        return Err(LtrcError::ZeroRiskSet(y.as_f64()));
    }
    let mu = fit.l_n.eval(y) * fit.h_bar_n.eval_left(y) / c;
    debug_assert!(
        mu >= -T::of(1e-12) && mu <= T::one() + T::of(1e-12),
        "mu_n evaluated outside [0,1]: {mu}"
    );
    Ok(mu)
}

/// Evaluates `μ_n` at every observed lifetime and checks the He–Yang
/// invariance: the estimate must not depend on the evaluation point.
///
/// The spread tolerance is `1e-9` (wider for scalar types whose epsilon
/// exceeds it). A violation indicates an implementation bug or tied
/// lifetimes, not a property of the data-generating model.
pub fn default_mu<T: Real>(sample: &LtrcSample<T>, fit: &SurvivalFit<T>) -> Result<T> {
    let tol = T::of(1e-9).max(T::epsilon() * T::of(100.0));
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    let mut last = None;
    for &i in sample.z_sorted_idx() {
        let z = sample.obs(i).z;
        if sample.count_risk_set(z) == 0 {
            continue;
        }
        let mu = estimate_mu(sample, fit, z)?;
        lo = lo.min(mu);
        hi = hi.max(mu);
        last = Some(mu);
    }
    match last {
        None => Err(LtrcError::ZeroRiskSet(f64::NAN)),
        Some(mu) => {
            let spread = hi - lo;
            if spread > tol {
                Err(LtrcError::InvarianceViolation {
                    max_spread: spread.as_f64(),
                })
            } else {
                Ok(mu)
            }
        }
    }
}
