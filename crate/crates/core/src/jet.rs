//! Truncated Taylor series ("jets") about a fixed expansion point.
//!
//! A jet of order `p` about `x0` stores `coeffs[j] = f^(j)(x0) / j!` for
//! `j = 0..=p`. Storing Taylor coefficients rather than raw derivatives keeps
//! the factorials out of the numbers at the orders the AIM recursion uses.
//!
//! Binary operations require both operands to share `x0` and `order`; a
//! mismatch is an error rather than a silent truncation.

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet<T = f64> {
    coeffs: Vec<T>,
    x0: f64,
}

impl<T: Real> Jet<T> {
    pub fn from_coeffs(coeffs: Vec<T>, x0: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("jet needs at least one coefficient".into()));
        }
        if !x0.is_finite() {
            return Err(Error::InvalidInput(format!("expansion point {x0} is not finite")));
        }
        if let Some(j) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!("coefficient {j} is not finite")));
        }
        Ok(Self { coeffs, x0 })
    }

    /// The constant function `c`.
    pub fn constant(c: T, order: usize, x0: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::InvalidInput(format!("constant {c:?} is not finite")));
        }
        let mut coeffs = vec![T::zero(); order + 1];
        coeffs[0] = c;
        Self::from_coeffs(coeffs, x0)
    }

    pub fn zero(order: usize, x0: f64) -> Result<Self> {
        Self::constant(T::zero(), order, x0)
    }

    /// The function `f(x) = x`. Needs order >= 1 to carry the unit slope.
    pub fn identity(order: usize, x0: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput(
                "identity jet needs order >= 1 to represent its slope".into(),
            ));
        }
        let mut coeffs = vec![T::zero(); order + 1];
        coeffs[0] = T::from_f64(x0);
        coeffs[1] = T::one();
        Self::from_coeffs(coeffs, x0)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Value of the function at the expansion point.
    pub fn value(&self) -> T {
        self.coeffs[0]
    }

    /// The raw derivative `f^(j)(x0)`.
    pub fn derivative(&self, j: usize) -> Option<T> {
        let c = *self.coeffs.get(j)?;
        let fact = (1..=j).fold(T::one(), |acc, i| acc * T::from_usize(i));
        Some(c * fact)
    }

    pub fn max_abs(&self) -> T {
        self.coeffs
            .iter()
            .map(|c| c.abs())
            .fold(T::zero(), |m, c| if c > m { c } else { m })
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Drop coefficients above `order`.
    pub fn truncate(&self, order: usize) -> Result<Self> {
        if order > self.order() {
            return Err(Error::InvalidInput(format!(
                "cannot truncate order-{} jet up to order {order}",
                self.order()
            )));
        }
        Ok(Self {
            coeffs: self.coeffs[..=order].to_vec(),
            x0: self.x0,
        })
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.x0 != other.x0 {
            return Err(Error::Mismatch {
                what: "expansion point",
                left: self.x0.to_string(),
                right: other.x0.to_string(),
            });
        }
        if self.order() != other.order() {
            return Err(Error::Mismatch {
                what: "order",
                left: self.order().to_string(),
                right: other.order().to_string(),
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| a + b).collect();
        Ok(Self { coeffs, x0: self.x0 })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| a - b).collect();
        Ok(Self { coeffs, x0: self.x0 })
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&a| a * c).collect(),
            x0: self.x0,
        }
    }

    /// Truncated Cauchy product.
    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = vec![T::zero(); self.coeffs.len()];
        mul_into(&self.coeffs, &other.coeffs, &mut out);
        Ok(Self {
            coeffs: out,
            x0: self.x0,
        })
    }

    /// Multiplicative inverse, by the usual series division recurrence.
    pub fn recip(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if a0 == T::zero() {
            return Err(Error::PoleAtExpansionPoint { x0: self.x0 });
        }
        let inv0 = T::one() / a0;
        let mut out: Vec<T> = Vec::with_capacity(self.coeffs.len());
        out.push(inv0);
        for j in 1..self.coeffs.len() {
            let mut acc = T::zero();
            for i in 1..=j {
                acc += self.coeffs[i] * out[j - i];
            }
            out.push(-(acc * inv0));
        }
        Self::from_coeffs(out, self.x0)
    }

    /// Derivative; the result has order one less than the input.
    pub fn diff(&self) -> Result<Self> {
        if self.order() == 0 {
            return Err(Error::OrderExhausted);
        }
        let coeffs = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(j, &c)| c * T::from_usize(j + 1))
            .collect();
        Ok(Self { coeffs, x0: self.x0 })
    }

    /// Evaluate the truncated series at `x`.
    pub fn eval(&self, x: T) -> T {
        let h = x - T::from_f64(self.x0);
        self.coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * h + c)
    }
}

impl Jet<f64> {
    /// Promote an `f64` jet to another scalar type.
    pub fn lift<U: Real>(&self) -> Jet<U> {
        Jet {
            coeffs: self.coeffs.iter().map(|&c| U::from_f64(c)).collect(),
            x0: self.x0,
        }
    }
}

/// Number of coefficients up to and including the last non-zero one.
fn support(a: &[impl Real]) -> usize {
    a.iter().rposition(|c| c.sign() != 0).map_or(0, |i| i + 1)
}

/// `out[j] += sum_{i<=j} a[i] * b[j-i]` for `j < out.len()`, skipping the
/// zero tails of `a` and `b` (the problem jets are often low-degree polynomials).
pub(crate) fn mul_add_into<T: Real>(a: &[T], b: &[T], out: &mut [T]) {
    let n = out.len();
    let la = support(&a[..n.min(a.len())]);
    let lb = support(&b[..n.min(b.len())]);
    for i in 0..la {
        let ai = a[i];
        let jmax = n.min(i + lb);
        for j in i..jmax {
            out[j] += ai * b[j - i];
        }
    }
}

fn mul_into<T: Real>(a: &[T], b: &[T], out: &mut [T]) {
    for o in out.iter_mut() {
        *o = T::zero();
    }
    mul_add_into(a, b, out);
}
