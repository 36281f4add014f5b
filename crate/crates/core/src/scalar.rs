//! Floating-point abstraction shared by the spectral core.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Real scalar usable by the harmonic transforms and the equivariant operators.
///
/// Implemented for `f32` and `f64`. Tolerances quoted throughout the crate
/// assume `f64`; `f32` works with proportionally looser bounds.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + rustfft::FftNum
    + Default
    + num_traits::NumAssign
    + Debug
    + Display
    + Sum
    + Send
    + Sync
    + 'static
{
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("literal fits the scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("integer fits the scalar type")
    }

    #[inline]
    fn from_isize_lossy(n: isize) -> Self {
        <Self as FromPrimitive>::from_isize(n).expect("integer fits the scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type Cplx<T> = Complex<T>;

/// `e^{i x}`.
#[inline]
pub fn cis<T: Real>(x: T) -> Cplx<T> {
    Complex::new(x.cos(), x.sin())
}

/// `(-1)^k` for signed integers.
#[inline]
pub fn parity<T: Real>(k: isize) -> T {
    if k.rem_euclid(2) == 0 {
        T::one()
    } else {
        -T::one()
    }
}
