//! Numeric traits the library is generic over.
//!
//! [`Scalar`] is the floating-point family used by the model and the bound
//! machinery. [`Weight`] is the weaker ring-like interface the exact oracle
//! needs, so that it can also run on exact rationals.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; used for literal constants.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Edge weight / probability type accepted by the exact oracle.
pub trait Weight: Num + Clone + PartialOrd + Debug + Send + Sync {
    /// Slack below zero still counted as "holds" when checking inequalities.
    fn slack_tolerance() -> Self;

    fn to_f64(&self) -> f64;

    /// Converts a probability given as `f64`; `None` when not representable.
    fn from_probability(p: f64) -> Option<Self>;
}

impl Weight for f64 {
    fn slack_tolerance() -> Self {
        1e-12
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_probability(p: f64) -> Option<Self> {
        Some(p)
    }
}

impl Weight for f32 {
    fn slack_tolerance() -> Self {
        1e-5
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
    fn from_probability(p: f64) -> Option<Self> {
        Some(p as f32)
    }
}

impl Weight for Ratio<i64> {
    fn slack_tolerance() -> Self {
        Ratio::from_integer(0)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_probability(p: f64) -> Option<Self> {
        Ratio::<i64>::approximate_float(p)
    }
}

impl Weight for Ratio<i128> {
    fn slack_tolerance() -> Self {
        Ratio::from_integer(0)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_probability(p: f64) -> Option<Self> {
        Ratio::<i128>::approximate_float(p)
    }
}

impl Weight for BigRational {
    fn slack_tolerance() -> Self {
        Ratio::from_integer(BigInt::from(0))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_probability(p: f64) -> Option<Self> {
        // exact binary expansion of the double
        BigRational::from_float(p)
    }
}
