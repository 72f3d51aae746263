//! Scalar abstraction for the numeric core.
//!
//! Everything downstream of the CSV boundary is generic over [`Real`], so the
//! same code runs at `f32` or `f64`. The accuracy contracts quoted elsewhere
//! in the crate (e.g. the 1e-10 bound on the regularized incomplete beta)
//! assume `f64`; the crate root exports `f64` aliases for the common types.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum<Self> + Debug + Display + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for lifting an `f64` constant into the working scalar type.
#[inline]
pub(crate) fn real<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("f64 constant must convert to the scalar type")
}

/// Lossless-enough round trip to `f64` for mixed-precision arithmetic.
#[inline]
pub(crate) fn to_f64<F: Real>(x: F) -> f64 {
    x.to_f64().expect("scalar must convert to f64")
}
