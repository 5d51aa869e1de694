//! Scalar abstraction shared by the numeric kernels (BM25 scoring, interval
//! statistics, popularity transforms, threshold search).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + NumCast + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Lossy conversion from `f64`. Used for literal constants.
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("f64 literal representable in scalar type")
    }

    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
