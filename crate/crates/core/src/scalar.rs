//! Scalar abstraction shared by every module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the construction is generic over: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Converts an integer into the working scalar.
#[inline]
pub fn int<T: Real>(k: u64) -> T {
    T::from_u64(k).expect("integer representable in scalar type")
}

#[inline]
pub fn sint<T: Real>(k: i64) -> T {
    T::from_i64(k).expect("integer representable in scalar type")
}

/// Tolerance used to snap points onto edges, slits and circles.
///
/// About `1e-12` for `f64`.
#[inline]
pub fn snap_tol<T: Real>() -> T {
    T::epsilon() * lit(4096.0)
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Reduces an angle into `(-pi, pi]`.
#[inline]
pub fn normalize_angle<T: Real>(a: T) -> T {
    if !a.is_finite() {
        return a;
    }
    let two_pi = T::TAU();
    let r = a - two_pi * ((a - T::PI()) / two_pi).ceil();
    if r <= -T::PI() {
        r + two_pi
    } else if r > T::PI() {
        r - two_pi
    } else {
        r
    }
}

/// Reduces an angle into `[0, 2pi)`.
#[inline]
pub fn angle_0_2pi<T: Real>(a: T) -> T {
    let r = normalize_angle(a);
    if r < T::zero() {
        r + T::TAU()
    } else {
        r
    }
}

/// `exp(a + ib) - 1` without cancellation for small `a`, `b`.
pub fn exp_m1_complex<T: Real>(a: T, b: T) -> num_complex::Complex<T> {
    let half = b / lit(2.0);
    let s = half.sin();
    let cos_m1 = -(s * s) * lit(2.0);
    let em1 = a.exp_m1();
    num_complex::Complex::new(em1 * b.cos() + cos_m1, a.exp() * b.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn angle_reduction_interval() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-15);
        assert!((normalize_angle(-0.5) + 0.5).abs() < 1e-16);
        assert!((normalize_angle(2.0 * PI + 0.25) - 0.25).abs() < 1e-15);
        assert!((angle_0_2pi(-PI / 2.0) - 1.5 * PI).abs() < 1e-15);
    }

    #[test]
    fn expm1_complex_small_arguments() {
        let v = exp_m1_complex(1e-9_f64, 2e-9);
        // a + a^2/2 - b^2/2 and b(1 + a) to second order
        assert!((v.re - (1e-9 - 1.5e-18)).abs() < 1e-24);
        assert!((v.im - (2e-9 + 2e-18)).abs() < 1e-24);
    }
}
