//! Scalar abstraction shared by every numerical kernel.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar accepted by the geometry kernels: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Relative width of the band around a zero certificate that is treated
    /// as the admissibility boundary (about `1e-14` for `f64`).
    #[inline]
    fn boundary_tol() -> Self {
        Self::epsilon() * Self::lit(45.0)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `sqrt(max(x, 0))`.
#[inline]
pub(crate) fn sqrt_pos<T: Real>(x: T) -> T {
    if x > T::zero() {
        x.sqrt()
    } else {
        T::zero()
    }
}

/// `ln(cosh(r))` without overflow for large `|r|`.
#[inline]
pub(crate) fn ln_cosh<T: Real>(r: T) -> T {
    let a = r.abs();
    a + (-(a + a)).exp().ln_1p() - T::LN_2()
}

/// `arccosh(1 + x)` for `x >= 0`, accurate when `x` is small.
#[inline]
pub(crate) fn acosh_1p<T: Real>(x: T) -> T {
    let x = x.max(T::zero());
    (x + (x * (x + T::lit(2.0))).sqrt()).ln_1p()
}

/// Hyperbolic secant, `0` once `cosh` overflows.
#[inline]
pub(crate) fn sech<T: Real>(r: T) -> T {
    let c = r.cosh();
    if c.is_finite() {
        T::one() / c
    } else {
        T::zero()
    }
}
