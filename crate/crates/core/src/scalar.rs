//! Floating point abstraction shared by every state-vector routine.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, NumAssign};

/// Real scalar backing complex amplitudes.
///
/// Implemented for `f32` and `f64`. The tolerance is the single equality
/// threshold used for normalization, orthonormality and unitarity checks.
pub trait Real: Float + FloatConst + NumAssign + Debug + Display + Default + Send + Sync + 'static {
    /// Global equality tolerance for this precision.
    fn tolerance() -> Self;

    /// Lossy conversion from `f64`.
    fn from_f64(x: f64) -> Self;

    /// Lossless widening to `f64`.
    fn as_f64(self) -> f64;
}

/// Equality tolerance for double precision.
pub const TOLERANCE_F64: f64 = 1e-12;

/// Equality tolerance for single precision.
pub const TOLERANCE_F32: f32 = 2e-5;

impl Real for f64 {
    #[inline]
    fn tolerance() -> Self {
        TOLERANCE_F64
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    #[inline]
    fn tolerance() -> Self {
        TOLERANCE_F32
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

/// Complex amplitude over a [`Real`] scalar.
pub type Amplitude<T> = Complex<T>;

/// `1/sqrt(2)` at the requested precision.
#[inline]
pub fn frac_1_sqrt_2<T: Real>() -> T {
    T::FRAC_1_SQRT_2()
}

#[inline]
pub(crate) fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::from_f64(re), T::from_f64(im))
}

#[inline]
pub(crate) fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn cone<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}
