//! Scalar abstraction: every estimator in this crate is generic over the
//! floating-point type. `f64` is the default precision; `f32` works but the
//! tighter tolerances quoted in the docs assume `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; panics only for non-finite inputs that
    /// the target type cannot represent, which never happens for constants.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant not representable in scalar type")
    }

    /// Widening conversion to `f64` for reporting and error payloads.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}
