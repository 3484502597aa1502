//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// A real type usable for probabilities.
///
/// Implemented for `f32` and `f64`. The tolerances scale with the precision of
/// the type, so an `f32` network validates with a looser row-sum check.
pub trait Prob:
    Float + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + Serialize + DeserializeOwned + 'static
{
    /// Maximum allowed deviation of a CPT row sum from one.
    fn row_tolerance() -> Self;

    /// Row-sum deviation attributable to printing and rounding; such rows
    /// are kept as written rather than renormalized.
    fn sum_noise() -> Self;

    /// Converts an `f64` literal. Panics only for values the type cannot hold.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in target float type")
    }

    #[inline]
    fn from_count(c: u64) -> Self {
        Self::from_u64(c).expect("count representable in target float type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Prob for f32 {
    #[inline]
    fn row_tolerance() -> Self {
        1e-5
    }

    #[inline]
    fn sum_noise() -> Self {
        1e-6
    }
}

impl Prob for f64 {
    #[inline]
    fn row_tolerance() -> Self {
        1e-9
    }

    #[inline]
    fn sum_noise() -> Self {
        1e-11
    }
}
