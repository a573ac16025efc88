//! Observed-data model for left-truncated right-censored (LTRC) samples.
//!
//! A latent lifetime `Y` is censored by `W` (observed `Z = Y ∧ W`,
//! `δ = 1{Y ≤ W}`) and the triple enters the sample only when `T ≤ Z`. All
//! types here are immutable after construction and safe to share across
//! threads.

use crate::error::{LtrcError, Result};
use crate::scalar::Real;

/// One observed record `(x, z, t, δ)` with `t ≤ z`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtrcObservation<T> {
    /// Covariate vector (dimension `d`; the simulation design uses `d = 1`).
    pub x: Vec<T>,
    /// Observed lifetime `z = y ∧ w`.
    pub z: T,
    /// Left-truncation time.
    pub t: T,
    /// Censoring indicator: `true` iff the lifetime was observed (`δ = 1`).
    pub delta: bool,
}

impl<T: Real> LtrcObservation<T> {
    /// Convenience constructor for scalar covariates.
    pub fn scalar(x: T, z: T, t: T, delta: bool) -> Self {
        Self {
            x: vec![x],
            z,
            t,
            delta,
        }
    }
}

/// A validated LTRC sample with cached orderings for the risk-set counts and
/// product-limit traversals.
#[derive(Debug, Clone, PartialEq)]
pub struct LtrcSample<T> {
    observations: Vec<LtrcObservation<T>>,
    dim: usize,
    z_sorted_idx: Vec<usize>,
    t_sorted_idx: Vec<usize>,
    z_sorted: Vec<T>,
    t_sorted: Vec<T>,
}

impl<T: Real> LtrcSample<T> {
    /// Validates the raw records and builds the sorted caches.
    ///
    /// Rejects empty input, non-finite fields, inconsistent covariate
    /// dimensions and records violating the observation condition `t ≤ z`.
    pub fn validate(raw: Vec<LtrcObservation<T>>) -> Result<Self> {
        if raw.is_empty() {
            return Err(LtrcError::EmptySample);
        }
        let dim = raw[0].x.len();
        for (index, obs) in raw.iter().enumerate() {
            let reject = |reason: &str| LtrcError::InvalidRecord {
                index,
                reason: reason.to_string(),
            };
            if obs.x.is_empty() {
                return Err(reject("empty covariate vector"));
            }
            if obs.x.len() != dim {
                return Err(reject("covariate dimension differs from first record"));
            }
            if obs.x.iter().any(|v| !v.is_finite()) || !obs.z.is_finite() || !obs.t.is_finite() {
                return Err(reject("non-finite field"));
            }
            if obs.t > obs.z {
                return Err(reject("t > z"));
            }
        }

        let n = raw.len();
        let mut z_sorted_idx: Vec<usize> = (0..n).collect();
        // Stable sort keeps tied values in input order.
        z_sorted_idx.sort_by(|&a, &b| raw[a].z.partial_cmp(&raw[b].z).unwrap());
        let mut t_sorted_idx: Vec<usize> = (0..n).collect();
        t_sorted_idx.sort_by(|&a, &b| raw[a].t.partial_cmp(&raw[b].t).unwrap());
        let z_sorted = z_sorted_idx.iter().map(|&i| raw[i].z).collect();
        let t_sorted = t_sorted_idx.iter().map(|&i| raw[i].t).collect();

        Ok(Self {
            observations: raw,
            dim,
            z_sorted_idx,
            t_sorted_idx,
            z_sorted,
            t_sorted,
        })
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }

    /// Covariate dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn observations(&self) -> &[LtrcObservation<T>] {
        &self.observations
    }

    pub fn obs(&self, i: usize) -> &LtrcObservation<T> {
        &self.observations[i]
    }

    /// Indices of the observations in nondecreasing `z` order (ties in input
    /// order).
    pub fn z_sorted_idx(&self) -> &[usize] {
        &self.z_sorted_idx
    }

    /// Indices in nondecreasing `t` order (ties in input order).
    pub fn t_sorted_idx(&self) -> &[usize] {
        &self.t_sorted_idx
    }

    pub fn max_z(&self) -> T {
        *self.z_sorted.last().unwrap()
    }

    pub fn min_z(&self) -> T {
        self.z_sorted[0]
    }

    /// Size of the risk set `{j : T_j ≤ y ≤ Z_j}`.
    ///
    /// Dividing by `n` gives the empirical `C_n(y)`. Every `T_j ≤ Z_j`, so
    /// the count of `Z_j < y` never exceeds the count of `T_j ≤ y`.
    pub fn count_risk_set(&self, y: T) -> usize {
        let t_le = self.t_sorted.partition_point(|t| *t <= y);
        let z_lt = self.z_sorted.partition_point(|z| *z < y);
        t_le - z_lt
    }

    /// `C_n(y)`, the risk-set proportion.
    pub fn risk_fraction(&self, y: T) -> T {
        T::from_usize(self.count_risk_set(y)).unwrap() / T::from_usize(self.n()).unwrap()
    }
}
