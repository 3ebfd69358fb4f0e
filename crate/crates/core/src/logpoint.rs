//! Complex numbers stored as `(log |z|, arg z)`.
//!
//! Radii of the construction grow doubly exponentially, so every point that
//! crosses module boundaries travels in this form. The origin is encoded by a
//! log-modulus of `-inf`.

use std::ops::Mul;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::{lit, normalize_angle, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogPoint<T> {
    /// Natural log of the modulus; `-inf` at the origin.
    pub log_mod: T,
    /// Argument in `(-pi, pi]`.
    pub arg: T,
}

impl<T: Real> LogPoint<T> {
    /// Builds a point, reducing the argument into `(-pi, pi]`.
    pub fn new(log_mod: T, arg: T) -> Self {
        let arg = if log_mod == T::neg_infinity() {
            T::zero()
        } else {
            normalize_angle(arg)
        };
        Self { log_mod, arg }
    }

    pub fn origin() -> Self {
        Self {
            log_mod: T::neg_infinity(),
            arg: T::zero(),
        }
    }

    pub fn one() -> Self {
        Self {
            log_mod: T::zero(),
            arg: T::zero(),
        }
    }

    pub fn is_origin(&self) -> bool {
        self.log_mod == T::neg_infinity()
    }

    pub fn from_complex(z: Complex<T>) -> Self {
        if z.re == T::zero() && z.im == T::zero() {
            return Self::origin();
        }
        // hypot keeps full precision for tiny and huge components
        Self::new(z.re.hypot(z.im).ln(), z.im.atan2(z.re))
    }

    /// Positive real number `exp(log_mod)`.
    pub fn from_log_modulus(log_mod: T) -> Self {
        Self::new(log_mod, T::zero())
    }

    pub fn to_complex(&self) -> Complex<T> {
        if self.is_origin() {
            return Complex::new(T::zero(), T::zero());
        }
        let r = self.log_mod.exp();
        Complex::new(r * self.arg.cos(), r * self.arg.sin())
    }

    /// Integer power `z^k`, with the argument multiplied before reduction.
    pub fn powu(&self, k: u64) -> Self {
        if self.is_origin() {
            return if k == 0 { Self::one() } else { Self::origin() };
        }
        let kk: T = crate::scalar::int(k);
        Self::new(self.log_mod * kk, self.arg * kk)
    }

    pub fn inv(&self) -> Self {
        Self::new(-self.log_mod, -self.arg)
    }

    pub fn conj(&self) -> Self {
        Self::new(self.log_mod, -self.arg)
    }

    /// Multiplies by the positive real `exp(delta)`.
    pub fn scale_log(&self, delta: T) -> Self {
        Self::new(self.log_mod + delta, self.arg)
    }

    /// `self + delta` for a perturbation small compared to `|self|`.
    ///
    /// Computed as `self * (1 + delta/self)` so that the result stays exact in
    /// log space even when `|self|` is far outside the `f64` range.
    pub fn offset(&self, delta: Complex<T>) -> Self {
        if self.is_origin() {
            return Self::from_complex(delta);
        }
        let rel = delta * Self::new(-self.log_mod, -self.arg).to_complex();
        let w = Complex::new(T::one() + rel.re, rel.im);
        let f = Self::from_complex(w);
        Self::new(self.log_mod + f.log_mod, self.arg + f.arg)
    }

    /// Circular distance between arguments plus log-modulus distance.
    ///
    /// Used for tolerance checks in log space.
    pub fn log_distance(&self, other: &Self) -> T {
        if self.is_origin() || other.is_origin() {
            return if self.is_origin() && other.is_origin() {
                T::zero()
            } else {
                T::infinity()
            };
        }
        let dl = (self.log_mod - other.log_mod).abs();
        let da = normalize_angle(self.arg - other.arg).abs();
        dl.max(da)
    }

    /// Converts into another scalar type.
    pub fn cast<U: Real>(&self) -> LogPoint<U> {
        LogPoint {
            log_mod: U::from(self.log_mod).unwrap_or(U::nan()),
            arg: U::from(self.arg).unwrap_or(U::nan()),
        }
    }
}

impl<T: Real> Mul for LogPoint<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        if self.is_origin() || rhs.is_origin() {
            return Self::origin();
        }
        Self::new(self.log_mod + rhs.log_mod, self.arg + rhs.arg)
    }
}

impl<T: Real> From<Complex<T>> for LogPoint<T> {
    fn from(z: Complex<T>) -> Self {
        Self::from_complex(z)
    }
}

/// `|self / other - 1|`-style closeness check in log space.
pub fn close<T: Real>(a: &LogPoint<T>, b: &LogPoint<T>, tol: f64) -> bool {
    a.log_distance(b) <= lit(tol)
}
