//! Distributional checks of the simulation engine against numeric
//! integration oracles (independent-covariate case, where the latent laws
//! are known in closed form).

mod common;

use common::*;
use ltrc::simulate::{calibrate_rates, gen_ltrc_sample, SimConfig};
use ltrc::stats::normal_cdf;

/// Closed-form latent laws for ρ = 0: `Y ~ N(0, slope²/4·…)`; concretely
/// `X = 0.5 e`, so `Y ~ N(0, slope² · 0.25 + σ²)`.
struct IidOracle {
    sd_y: f64,
    a0: f64,
    u0: f64,
}

impl IidOracle {
    fn new(cfg: &SimConfig) -> Self {
        assert_eq!(cfg.rho, 0.0);
        assert_eq!(cfg.intercept, 0.0);
        Self {
            sd_y: (cfg.slope * cfg.slope * 0.25 + cfg.sigma_noise * cfg.sigma_noise).sqrt(),
            a0: cfg.a0,
            u0: cfg.u0,
        }
    }

    fn f_y(&self, y: f64) -> f64 {
        let u = y / self.sd_y;
        (-0.5 * u * u).exp() / (self.sd_y * (2.0 * std::f64::consts::PI).sqrt())
    }

    fn s_y(&self, y: f64) -> f64 {
        1.0 - normal_cdf(y / self.sd_y)
    }

    fn s_w(&self, w: f64) -> f64 {
        if w <= 0.0 {
            1.0
        } else {
            (-self.a0 * w).exp()
        }
    }

    fn f_w(&self, w: f64) -> f64 {
        if w < 0.0 {
            0.0
        } else {
            self.a0 * (-self.a0 * w).exp()
        }
    }

    fn l_t(&self, y: f64) -> f64 {
        normal_cdf((y - self.u0) / f64::sqrt(2.0))
    }

    // Density of Z = Y ∧ W.
    fn f_z(&self, z: f64) -> f64 {
        self.f_y(z) * self.s_w(z) + self.s_y(z) * self.f_w(z)
    }

    /// `μ = P(T ≤ Z)`.
    fn mu(&self) -> f64 {
        let span = 8.0 * self.sd_y + 8.0 / self.a0;
        simpson(
            |z| self.l_t(z) * self.f_z(z),
            -8.0 * self.sd_y,
            span,
            40_000,
        )
    }

    /// Censored fraction among observed records,
    /// `P(Y > W, T ≤ W) / P(T ≤ Z)`.
    fn cr_observed(&self) -> f64 {
        let hi = 8.0 / self.a0 + 8.0 * self.sd_y;
        let num = simpson(|w| self.f_w(w) * self.s_y(w) * self.l_t(w), 0.0, hi, 40_000);
        num / self.mu()
    }
}

fn iid_config(a0: f64, u0: f64, n: usize, seed: u64) -> SimConfig {
    SimConfig {
        rho: 0.0,
        sigma_noise: 0.1,
        slope: 2.0,
        intercept: 0.0,
        a0,
        u0,
        n,
        seed,
    }
}

#[test]
fn realized_rates_match_quadrature_oracle() {
    let cfg = iid_config(0.35, -1.5, 10_000, 2024);
    let oracle = IidOracle::new(&cfg);
    let (_, stats) = gen_ltrc_sample(&cfg).unwrap();

    let tr_theory = 1.0 - oracle.mu();
    let cr_theory = oracle.cr_observed();

    // Binomial 3·SE bands at n = 10⁴ draws/records.
    let se_cr = (cr_theory * (1.0 - cr_theory) / cfg.n as f64).sqrt();
    assert!(
        (stats.cr_realized - cr_theory).abs() < 3.0 * se_cr + 1e-3,
        "cr realized {} vs theory {}",
        stats.cr_realized,
        cr_theory
    );
    let n_drawn = stats.n_drawn as f64;
    let se_tr = (tr_theory * (1.0 - tr_theory) / n_drawn).sqrt();
    assert!(
        (stats.tr_realized - tr_theory).abs() < 3.0 * se_tr + 1e-3,
        "tr realized {} vs theory {}",
        stats.tr_realized,
        tr_theory
    );
}

#[test]
fn calibrated_rates_hit_targets_through_oracle() {
    let template = iid_config(0.5, -2.0, 10_000, 7);
    let (a0, u0) = calibrate_rates(0.2, 0.2, &template).unwrap();

    let cfg = iid_config(a0, u0, 10_000, 3131);
    let oracle = IidOracle::new(&cfg);
    assert!(
        (oracle.cr_observed() - 0.2).abs() < 0.025,
        "oracle cr {}",
        oracle.cr_observed()
    );
    assert!(
        (1.0 - oracle.mu() - 0.2).abs() < 0.025,
        "oracle tr {}",
        1.0 - oracle.mu()
    );

    let (_, stats) = gen_ltrc_sample(&cfg).unwrap();
    assert!(
        (stats.cr_realized - 0.2).abs() < 0.03,
        "cr {}",
        stats.cr_realized
    );
    assert!(
        (stats.tr_realized - 0.2).abs() < 0.03,
        "tr {}",
        stats.tr_realized
    );
}

#[test]
fn truncation_probability_estimate_approaches_oracle_mu() {
    let cfg = iid_config(0.35, -1.5, 4_000, 99);
    let oracle = IidOracle::new(&cfg);
    let (sample, _) = gen_ltrc_sample(&cfg).unwrap();
    let fit = ltrc::SurvivalFit::fit(&sample).unwrap();
    // μ_n is √n-consistent; 4 standard-error-ish slack at n = 4000.
    assert!(
        (fit.mu_n - oracle.mu()).abs() < 0.05,
        "mu_n {} vs oracle {}",
        fit.mu_n,
        oracle.mu()
    );
}
