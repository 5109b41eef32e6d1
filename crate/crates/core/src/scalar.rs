//! Scalar abstraction shared by the geometry and statistics code.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable for mesh coordinates and sample statistics.
///
/// Implemented for `f32` and `f64`. `Display` must print the shortest string
/// that parses back to the same value, which both primitive floats guarantee.
pub trait Real: Float + FromPrimitive + ToPrimitive + NumAssign + FromStr + Display + Debug + Default + Send + Sync + 'static {
    /// Lossy conversion from `f64` (used for literals and tolerances).
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("float literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Exact rational used for preference scores.
pub type Rational = num_rational::Ratio<i64>;

/// Converts an exact rational to the nearest `f64`.
pub fn rational_to_f64(value: Rational) -> f64 {
    *value.numer() as f64 / *value.denom() as f64
}
