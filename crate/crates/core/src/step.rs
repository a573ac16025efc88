//! Right-continuous piecewise-constant functions on the real line.
//!
//! Every distribution-type estimator in this crate (empirical d.f.'s,
//! product-limit estimators, cumulative hazard) is returned as a
//! [`StepFunction`]. Left limits are first-class: the truncation-probability
//! estimate is only evaluation-point invariant under a left-limit convention
//! at atoms, so `eval_left` must be exact, not approximated.

use crate::error::{LtrcError, Result};
use crate::scalar::Real;

/// A right-continuous step function: `eval(y)` returns the value attached to
/// the largest jump point `<= y`, or the floor value below the first jump.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction<T> {
    jumps: Vec<T>,
    values: Vec<T>,
    floor: T,
}

impl<T: Real> StepFunction<T> {
    /// Builds a step function from strictly increasing jump points.
    pub fn new(floor: T, jumps: Vec<T>, values: Vec<T>) -> Result<Self> {
        if jumps.len() != values.len() {
            return Err(LtrcError::InvalidConfig(format!(
                "jump/value length mismatch: {} vs {}",
                jumps.len(),
                values.len()
            )));
        }
        for w in jumps.windows(2) {
            if !(w[0] < w[1]) {
                return Err(LtrcError::InvalidConfig(
                    "jump points must be strictly increasing".into(),
                ));
            }
        }
        if jumps.iter().any(|p| !p.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(LtrcError::InvalidConfig(
                "non-finite jump point or value".into(),
            ));
        }
        Ok(Self {
            jumps,
            values,
            floor,
        })
    }

    /// The constant function `y ↦ c`.
    pub fn constant(c: T) -> Self {
        Self {
            jumps: Vec::new(),
            values: Vec::new(),
            floor: c,
        }
    }

    /// Right-continuous evaluation.
    pub fn eval(&self, y: T) -> T {
        let k = self.jumps.partition_point(|p| *p <= y);
        if k == 0 {
            self.floor
        } else {
            self.values[k - 1]
        }
    }

    /// Left-limit evaluation: the value attached to the largest jump `< y`.
    pub fn eval_left(&self, y: T) -> T {
        let k = self.jumps.partition_point(|p| *p < y);
        if k == 0 {
            self.floor
        } else {
            self.values[k - 1]
        }
    }

    pub fn jumps(&self) -> &[T] {
        &self.jumps
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn floor(&self) -> T {
        self.floor
    }

    /// True if the attached values never decrease (floor included).
    pub fn is_nondecreasing(&self) -> bool {
        let mut prev = self.floor;
        self.values.iter().all(|&v| {
            let ok = v >= prev;
            prev = v;
            ok
        })
    }

    /// True if floor and all values lie in `[0, 1]`.
    pub fn within_unit_interval(&self) -> bool {
        let in_unit = |v: T| v >= T::zero() && v <= T::one();
        in_unit(self.floor) && self.values.iter().all(|&v| in_unit(v))
    }

    /// Exact sup-norm distance to another step function over `[lo, hi]`.
    ///
    /// Both functions are piecewise constant, so the supremum is attained at
    /// `lo` or at a jump point of either function inside the interval.
    pub fn sup_distance(&self, other: &Self, lo: T, hi: T) -> Result<T> {
        if !(lo <= hi) {
            return Err(LtrcError::InvalidInterval {
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        let mut sup = (self.eval(lo) - other.eval(lo)).abs();
        for &p in self.jumps.iter().chain(other.jumps.iter()) {
            if p > lo && p <= hi {
                sup = sup.max((self.eval(p) - other.eval(p)).abs());
            }
        }
        Ok(sup.max((self.eval(hi) - other.eval(hi)).abs()))
    }

    /// Sup-norm distance to an arbitrary target over `[lo, hi]`.
    ///
    /// Exactness at the atoms comes from probing every jump point together
    /// with its left limit; `grid` extra uniform points cover variation of
    /// the target between jumps (pass 0 for a monotone target if the jump
    /// probes plus endpoints are known to suffice).
    pub fn sup_distance_to(&self, target: impl Fn(T) -> T, lo: T, hi: T, grid: usize) -> Result<T> {
        if !(lo <= hi) {
            return Err(LtrcError::InvalidInterval {
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            });
        }
        let mut sup = (self.eval(lo) - target(lo)).abs();
        sup = sup.max((self.eval(hi) - target(hi)).abs());
        for &p in &self.jumps {
            if p >= lo && p <= hi {
                let t = target(p);
                sup = sup.max((self.eval(p) - t).abs());
                // Approaching p from the left the step still holds its prior
                // value while the target has already reached target(p).
                sup = sup.max((self.eval_left(p) - t).abs());
            }
        }
        if grid > 1 {
            let span = hi - lo;
            let denom = T::from_usize(grid - 1).unwrap();
            for k in 0..grid {
                let y = lo + span * T::from_usize(k).unwrap() / denom;
                sup = sup.max((self.eval(y) - target(y)).abs());
            }
        }
        Ok(sup)
    }
}

/// Default number of uniform grid points used when measuring the distance to
/// a smooth distribution function.
pub const SMOOTH_SUP_GRID: usize = 10_000;
