//! Scalar types the jet and AIM machinery can run on.
//!
//! `f64` is the everyday scalar. [`DoubleF64`] (a double-double, ~32 decimal
//! digits) is what the AIM engine uses at depth: the quantization determinant
//! is a difference of two nearly equal products, and by k ~ 60 the relative
//! gap sits at 1e-14..1e-16, below what `f64` can resolve.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

pub use twofloat::TwoFloat as DoubleF64;

pub trait Real:
    Copy
    + Debug
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + AddAssign
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
    fn is_finite(self) -> bool;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn from_usize(n: usize) -> Self {
        Self::from_f64(n as f64)
    }

    /// Sign as -1, 0 or +1.
    fn sign(self) -> i8 {
        let zero = Self::zero();
        if self > zero {
            1
        } else if self < zero {
            -1
        } else {
            0
        }
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }

    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }

    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Real for DoubleF64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        DoubleF64::from(x)
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self.hi() + self.lo()
    }

    #[inline]
    fn abs(self) -> Self {
        if self.hi() < 0.0 {
            -self
        } else {
            self
        }
    }

    #[inline]
    fn is_finite(self) -> bool {
        self.hi().is_finite() && self.lo().is_finite()
    }

    fn sign(self) -> i8 {
        // hi carries the sign unless it is exactly zero
        let h = self.hi();
        let v = if h != 0.0 { h } else { self.lo() };
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_f64_resolves_below_f64_epsilon() {
        let one = DoubleF64::one();
        let tiny = DoubleF64::from_f64(1e-20);
        let diff = (one + tiny) - one;
        assert!((diff.to_f64() - 1e-20).abs() < 1e-34);
        assert_eq!(((1.0f64 + 1e-20) - 1.0), 0.0);
    }

    #[test]
    fn sign_and_abs() {
        assert_eq!(DoubleF64::from_f64(-3.0).sign(), -1);
        assert_eq!(DoubleF64::zero().sign(), 0);
        assert_eq!(Real::abs(DoubleF64::from_f64(-2.5)).to_f64(), 2.5);
        assert_eq!(Real::sign(-0.0f64), 0);
    }
}
