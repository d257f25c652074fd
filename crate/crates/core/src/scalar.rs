use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the numerical modules are generic over.
///
/// The two tolerances scale with the precision of the type: `f64` uses the
/// documented `1e-12` (probability weights) and `1e-9` (geometry) while `f32`
/// falls back to what single precision can actually resolve.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Tolerance for the total mass of a probability vector.
    const WEIGHT_TOL: f64;
    /// Relative tolerance for determinants, covolumes and norm bounds.
    const GEOM_TOL: f64;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    #[inline]
    fn of_i64(v: i64) -> Self {
        <Self as FromPrimitive>::from_i64(v).expect("integer representable")
    }
}

impl Real for f64 {
    const WEIGHT_TOL: f64 = 1e-12;
    const GEOM_TOL: f64 = 1e-9;
}

impl Real for f32 {
    const WEIGHT_TOL: f64 = 1e-5;
    const GEOM_TOL: f64 = 1e-4;
}

/// Format a real with 17 significant digits, enough to round-trip an `f64`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}
