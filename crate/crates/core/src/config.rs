//! Kernel, objective function and estimator configuration.

use serde::{Deserialize, Serialize};

use crate::error::{LtrcError, Result};
use crate::scalar::Real;

/// Smoothing kernel. For covariate dimension `d > 1` the product kernel is
/// used coordinate-wise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// Standard Gaussian density.
    Gaussian,
    /// Epanechnikov kernel `0.75 (1 - u²)` on `[-1, 1]`; compact support, so
    /// distant observations receive exactly zero weight.
    Epanechnikov,
}

impl Kernel {
    /// One-dimensional kernel value.
    pub fn eval_1d<T: Real>(self, u: T) -> T {
        match self {
            Kernel::Gaussian => {
                let inv_sqrt_2pi = T::of(0.398_942_280_401_432_7);
                inv_sqrt_2pi * (-u * u / T::of(2.0)).exp()
            }
            Kernel::Epanechnikov => {
                if u.abs() <= T::one() {
                    T::of(0.75) * (T::one() - u * u)
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Product-kernel value `∏_j K((x_j - x0_j) / h)`.
    pub fn eval_scaled<T: Real>(self, x: &[T], x0: &[T], h: T) -> T {
        x.iter()
            .zip(x0)
            .map(|(&a, &b)| self.eval_1d((a - b) / h))
            .fold(T::one(), |acc, k| acc * k)
    }

    /// `κ = ∫ K²` for the product kernel in dimension `d`.
    ///
    /// Gaussian: `(2√π)⁻¹` per coordinate; Epanechnikov: `3/5`.
    pub fn square_integral<T: Real>(self, dim: usize) -> T {
        let kappa_1d: f64 = match self {
            Kernel::Gaussian => 0.28209479177387814, // 1/(2√π)
            Kernel::Epanechnikov => 0.6,
        };
        T::of(kappa_1d.powi(dim as i32))
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Gaussian => "gaussian",
            Kernel::Epanechnikov => "epanechnikov",
        }
    }

    // Simpson quadrature of the 1-d kernel over [-12, 12]; the built-in
    // kernels must integrate to 1 within 1e-6.
    fn mass_defect(self) -> f64 {
        let (lo, hi, m) = (-12.0f64, 12.0f64, 4000usize);
        let h = (hi - lo) / m as f64;
        let mut acc = self.eval_1d(lo) + self.eval_1d(hi);
        for k in 1..m {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * self.eval_1d(lo + k as f64 * h);
        }
        (acc * h / 3.0 - 1.0).abs()
    }
}

/// Objective function `ψ` together with an optional positive scale factor
/// (useful for checking that rescaling ψ changes neither the root nor the
/// variance estimate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Psi<T> {
    pub kind: PsiKind<T>,
    /// Multiplies ψ and ψ′; must be positive.
    pub factor: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiKind<T> {
    /// `ψ(u) = u`: the classical regression estimator.
    Identity,
    /// `ψ(u) = u / √(1 + (u/scale)²)`: bounded, odd and strictly increasing;
    /// `scale = 1` is the objective used in the simulation design.
    PseudoHuber { scale: T },
}

impl<T: Real> Psi<T> {
    pub fn identity() -> Self {
        Self {
            kind: PsiKind::Identity,
            factor: T::one(),
        }
    }

    /// The bounded objective `u / √(1 + u²)`.
    pub fn pseudo_huber() -> Self {
        Self {
            kind: PsiKind::PseudoHuber { scale: T::one() },
            factor: T::one(),
        }
    }

    pub fn pseudo_huber_with_scale(scale: T) -> Self {
        Self {
            kind: PsiKind::PseudoHuber { scale },
            factor: T::one(),
        }
    }

    /// Same objective multiplied by `c > 0`.
    pub fn scaled(self, c: T) -> Self {
        Self {
            kind: self.kind,
            factor: self.factor * c,
        }
    }

    pub fn eval(&self, u: T) -> T {
        self.factor
            * match self.kind {
                PsiKind::Identity => u,
                PsiKind::PseudoHuber { scale } => {
                    let r = u / scale;
                    u / (T::one() + r * r).sqrt()
                }
            }
    }

    /// Derivative `ψ′(u)`.
    pub fn deriv(&self, u: T) -> T {
        self.factor
            * match self.kind {
                PsiKind::Identity => T::one(),
                PsiKind::PseudoHuber { scale } => {
                    let r = u / scale;
                    let s = T::one() + r * r;
                    T::one() / (s * s.sqrt())
                }
            }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PsiKind::Identity => "identity",
            PsiKind::PseudoHuber { .. } => "pseudo_huber",
        }
    }
}

/// Configuration of the kernel M-estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig<T> {
    pub kernel: Kernel,
    pub psi: Psi<T>,
    /// Bandwidth `h_n > 0`.
    pub bandwidth: T,
    /// Upper z-value beyond which observations are rejected; `None` resolves
    /// to the sample maximum (no rejection).
    pub support_bound: Option<T>,
    /// Bisection tolerance on the root location.
    pub root_tol: T,
    pub root_max_iter: usize,
    /// Padding added around the kept responses when the root bracket is
    /// initialized.
    pub bracket_pad: T,
}

impl<T: Real> EstimatorConfig<T> {
    /// Builds and validates a configuration.
    ///
    /// Built-in kernels are checked to integrate to one (within 1e-6 by
    /// Simpson quadrature, done in f64 regardless of `T`) and ψ′ is checked
    /// to be positive on a wide grid.
    pub fn new(kernel: Kernel, psi: Psi<T>, bandwidth: T) -> Result<Self> {
        if !(bandwidth > T::zero()) {
            return Err(LtrcError::InvalidConfig(
                "bandwidth must be positive".into(),
            ));
        }
        if !(psi.factor > T::zero()) {
            return Err(LtrcError::InvalidConfig(
                "psi factor must be positive".into(),
            ));
        }
        if kernel.mass_defect() > 1e-6 {
            return Err(LtrcError::InvalidConfig(format!(
                "kernel {} does not integrate to 1",
                kernel.name()
            )));
        }
        for k in -200..=200 {
            let u = T::of(k as f64 * 0.1);
            if !(psi.deriv(u) > T::zero()) {
                return Err(LtrcError::InvalidConfig(
                    "psi must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self {
            kernel,
            psi,
            bandwidth,
            support_bound: None,
            root_tol: T::of(1e-10),
            root_max_iter: 200,
            bracket_pad: T::one(),
        })
    }

    /// Default configuration of the simulation study: Gaussian kernel and
    /// the bounded objective `u/√(1+u²)`.
    pub fn gaussian_pseudo_huber(bandwidth: T) -> Result<Self> {
        Self::new(Kernel::Gaussian, Psi::pseudo_huber(), bandwidth)
    }

    pub fn with_bandwidth(&self, h: T) -> Self {
        Self {
            bandwidth: h,
            ..self.clone()
        }
    }
}
