//! Scalar abstraction: the numeric kernels work for any IEEE float type.

use num_traits::{Float, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar usable by every kernel in this crate.
pub trait Scalar:
    Float + NumAssign + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + NumAssign + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

/// Lossy conversion from `f64`, for literals inside generic code.
#[inline]
pub fn from_f64<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal not representable in scalar type")
}
