//! Scalar abstraction shared by the geometry and pose-recovery code.

use nalgebra::RealField;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + FloatConst {}

impl<T> Real for T where T: RealField + Copy + FromPrimitive + ToPrimitive + FloatConst {}

/// Converts an `f64` constant into the working scalar.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant representable in scalar type")
}

/// Converts a scalar back to `f64`.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().expect("scalar convertible to f64")
}

/// Tolerance scaled to the precision of `T`: `tol64` for `f64`, never
/// below a few hundred ulps of `T`.
#[inline]
pub(crate) fn tolerance<T: Real>(tol64: f64) -> T {
    let floor = T::default_epsilon() * real::<T>(256.0);
    let tol = real::<T>(tol64);
    if tol > floor {
        tol
    } else {
        floor
    }
}
