//! Robust kernel M-estimation of a regression function from left-truncated
//! right-censored (LTRC) dependent data.
//!
//! The crate provides:
//!
//! * the full product-limit estimator stack for LTRC samples — empirical
//!   d.f.'s, Lynden-Bell and TJW estimators, cumulative hazard, and the
//!   He–Yang truncation-probability estimate ([`survival`]);
//! * the kernel M-estimator `m̂(x)` defined as the root of an
//!   inverse-probability-weighted score, with plug-in variance and
//!   asymptotic confidence intervals, the closed-form classical estimator,
//!   and least-squares cross-validation for the bandwidth ([`regress`]);
//! * an α-mixing AR(1) simulation design with exponential censoring, normal
//!   truncation and rate calibration ([`simulate`]);
//! * a Monte Carlo engine producing coverage tables, normalized-deviation
//!   densities, QQ data and confidence-band data ([`mc`]).
//!
//! Estimator math is generic over the scalar type via [`scalar::Real`];
//! `f64` aliases for the central types live at the crate root.

// Validation guards are written `!(x > 0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod io;
pub mod mc;
pub mod regress;
pub mod sample;
pub mod scalar;
pub mod simulate;
pub mod stats;
pub mod step;
pub mod survival;

pub use config::{EstimatorConfig, Kernel, Psi, PsiKind};
pub use error::{LtrcError, Result};
pub use sample::{LtrcObservation, LtrcSample};
pub use scalar::Real;
pub use step::StepFunction;
pub use survival::SurvivalFit;

/// Default-precision aliases.
pub type Observation64 = LtrcObservation<f64>;
pub type Sample64 = LtrcSample<f64>;
pub type StepFunction64 = StepFunction<f64>;
pub type SurvivalFit64 = SurvivalFit<f64>;
pub type EstimatorConfig64 = EstimatorConfig<f64>;
pub type EstimateResult64 = regress::EstimateResult<f64>;
pub type WeightedScore64 = regress::WeightedScore<f64>;

/// Single-precision aliases.
pub type Observation32 = LtrcObservation<f32>;
pub type Sample32 = LtrcSample<f32>;
pub type StepFunction32 = StepFunction<f32>;
pub type SurvivalFit32 = SurvivalFit<f32>;
pub type EstimatorConfig32 = EstimatorConfig<f32>;
