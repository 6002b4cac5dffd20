//! The asymptotic iteration method recursion and its quantization sequence.
//!
//! For `y'' = lam0(x) y' + s0(x) y` the iteration is
//!
//! ```text
//! lam_k = lam_{k-1}' + s_{k-1} + lam0 lam_{k-1}
//! s_k   = s_{k-1}'   + s0 lam_{k-1}
//! ```
//!
//! and eigenvalues are zeros of `delta_k = lam_k s_{k-1} - lam_{k-1} s_k`
//! at the expansion point. Every iterate is carried as a jet about that point;
//! each step consumes one order.
//!
//! The coefficients grow super-exponentially with k, so after each step the
//! pair `(lam_k, s_k)` is multiplied by a common power of two that brings the
//! largest coefficient into `(1/2, 1]`. `delta_k` then only picks up a
//! positive factor, and the factor is exact, so its sign is untouched.

use crate::error::{Error, Result};
use crate::jet::{mul_add_into, Jet};
use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct AimIterate<T = f64> {
    pub k: usize,
    pub lam: Jet<T>,
    pub s: Jet<T>,
    /// Natural log of the factor by which the stored jets were divided:
    /// the true `lam_k` is `exp(log_scale) * lam`.
    pub log_scale: f64,
}

impl<T: Real> AimIterate<T> {
    /// Iterate k = 0, the problem jets themselves.
    pub fn initial(lam0: &Jet<T>, s0: &Jet<T>) -> Result<Self> {
        check_pair(lam0, s0)?;
        Ok(Self {
            k: 0,
            lam: lam0.clone(),
            s: s0.clone(),
            log_scale: 0.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaEntry {
    pub k: usize,
    pub sign: i8,
    /// `delta_k` in the rescaled units of iterates k and k-1.
    pub scaled: f64,
    /// Natural log of the positive factor relating `scaled` to the true value:
    /// `delta_k = exp(log_scale) * scaled`.
    pub log_scale: f64,
}

impl DeltaEntry {
    /// `ln |delta_k|`, or `-inf` for an exact zero.
    pub fn ln_abs(&self) -> f64 {
        self.scaled.abs().ln() + self.log_scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSequence {
    pub values: Vec<DeltaEntry>,
    pub k_max: usize,
}

impl DeltaSequence {
    pub fn at(&self, k: usize) -> Option<&DeltaEntry> {
        k.checked_sub(1).and_then(|i| self.values.get(i))
    }

    pub fn last(&self) -> &DeltaEntry {
        self.values.last().expect("delta sequence is never empty")
    }
}

fn check_pair<T: Real>(lam0: &Jet<T>, s0: &Jet<T>) -> Result<()> {
    if lam0.x0() != s0.x0() {
        return Err(Error::Mismatch {
            what: "expansion point",
            left: lam0.x0().to_string(),
            right: s0.x0().to_string(),
        });
    }
    if lam0.order() != s0.order() {
        return Err(Error::Mismatch {
            what: "order",
            left: lam0.order().to_string(),
            right: s0.order().to_string(),
        });
    }
    Ok(())
}

/// One AIM step with rescaling.
pub fn aim_step<T: Real>(prev: &AimIterate<T>, lam0: &Jet<T>, s0: &Jet<T>) -> Result<AimIterate<T>> {
    aim_step_with(prev, lam0, s0, true)
}

/// One AIM step; `rescale = false` returns the raw iterate.
pub fn aim_step_with<T: Real>(
    prev: &AimIterate<T>,
    lam0: &Jet<T>,
    s0: &Jet<T>,
    rescale: bool,
) -> Result<AimIterate<T>> {
    check_pair(lam0, s0)?;
    if lam0.x0() != prev.lam.x0() {
        return Err(Error::Mismatch {
            what: "expansion point",
            left: lam0.x0().to_string(),
            right: prev.lam.x0().to_string(),
        });
    }
    let n = prev.lam.order();
    if n == 0 {
        return Err(Error::OrderExhausted);
    }
    if lam0.order() + 1 < n {
        return Err(Error::InvalidInput(format!(
            "problem jets of order {} cannot drive an order-{n} iterate",
            lam0.order()
        )));
    }

    let mut lam = vec![T::zero(); n];
    let mut s = vec![T::zero(); n];
    step_kernel(
        prev.lam.coeffs(),
        prev.s.coeffs(),
        lam0.coeffs(),
        s0.coeffs(),
        &mut lam,
        &mut s,
    );
    let k = prev.k + 1;
    let mut log_scale = prev.log_scale;
    if rescale {
        log_scale += rescale_pair(&mut lam, &mut s);
    }
    if !lam.iter().chain(&s).all(|c| c.is_finite()) {
        return Err(Error::Overflow { k });
    }
    let x0 = prev.lam.x0();
    Ok(AimIterate {
        k,
        lam: Jet::from_coeffs(lam, x0)?,
        s: Jet::from_coeffs(s, x0)?,
        log_scale,
    })
}

/// Evaluate `delta_1 .. delta_{k_max}` at the expansion point.
///
/// Requires `lam0.order() >= k_max + 1`.
pub fn delta_sequence<T: Real>(lam0: &Jet<T>, s0: &Jet<T>, k_max: usize) -> Result<DeltaSequence> {
    delta_sequence_with(lam0, s0, k_max, true)
}

pub fn delta_sequence_with<T: Real>(lam0: &Jet<T>, s0: &Jet<T>, k_max: usize, rescale: bool) -> Result<DeltaSequence> {
    check_pair(lam0, s0)?;
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }
    if lam0.order() < k_max + 1 {
        return Err(Error::OrderExhausted);
    }

    let l0 = lam0.coeffs();
    let q0 = s0.coeffs();
    let mut lam = l0.to_vec();
    let mut s = q0.to_vec();
    let mut next_lam = vec![T::zero(); lam.len()];
    let mut next_s = vec![T::zero(); lam.len()];
    let mut log_scale = 0.0;
    let mut values = Vec::with_capacity(k_max);

    for k in 1..=k_max {
        let n = lam.len() - 1;
        next_lam.truncate(n);
        next_s.truncate(n);
        step_kernel(&lam, &s, l0, q0, &mut next_lam, &mut next_s);

        let delta = next_lam[0] * s[0] - lam[0] * next_s[0];
        let scale_here = if rescale {
            rescale_pair(&mut next_lam, &mut next_s)
        } else {
            0.0
        };
        if !delta.is_finite() || !next_lam[0].is_finite() || !next_s[0].is_finite() {
            return Err(Error::Overflow { k });
        }
        // delta was formed from iterate k-1 in its stored units and the raw
        // iterate k in the same units, so the factor is exp(2 L_{k-1})
        values.push(DeltaEntry {
            k,
            sign: delta.sign(),
            scaled: delta.to_f64(),
            log_scale: 2.0 * log_scale,
        });
        log_scale += scale_here;

        std::mem::swap(&mut lam, &mut next_lam);
        std::mem::swap(&mut s, &mut next_s);
    }
    Ok(DeltaSequence { values, k_max })
}

/// `lam_k, s_k` from `lam_{k-1}, s_{k-1}`; output length is one less than input.
fn step_kernel<T: Real>(lam: &[T], s: &[T], lam0: &[T], s0: &[T], out_lam: &mut [T], out_s: &mut [T]) {
    let n = out_lam.len();
    debug_assert_eq!(lam.len(), n + 1);
    for j in 0..n {
        let d = T::from_usize(j + 1);
        out_lam[j] = d * lam[j + 1] + s[j];
        out_s[j] = d * s[j + 1];
    }
    mul_add_into(lam0, &lam[..n], out_lam);
    mul_add_into(s0, &lam[..n], out_s);
}

/// Multiply both slices by the power of two that puts the largest magnitude
/// in (1/2, 1]. Returns the natural log of the divisor.
fn rescale_pair<T: Real>(lam: &mut [T], s: &mut [T]) -> f64 {
    let max = lam
        .iter()
        .chain(s.iter())
        .map(|c| c.abs().to_f64())
        .fold(0.0f64, f64::max);
    if max == 0.0 || !max.is_finite() {
        return 0.0;
    }
    let mut exp = max.log2().ceil() as i32;
    // log2 rounding can land one off near exact powers of two
    if max > 2f64.powi(exp) {
        exp += 1;
    }
    if exp == 0 {
        return 0.0;
    }
    let factor = T::from_f64(pow2(-exp));
    for c in lam.iter_mut().chain(s.iter_mut()) {
        *c = *c * factor;
    }
    exp as f64 * std::f64::consts::LN_2
}

fn pow2(e: i32) -> f64 {
    // split so intermediate powers stay normal
    if e.abs() <= 1000 {
        2f64.powi(e)
    } else {
        2f64.powi(e / 2) * 2f64.powi(e - e / 2)
    }
}

/// Search settings for [`ratio_condition_root`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminationSearch {
    /// Parameter interval scanned for sign changes.
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    /// Bisection width.
    pub tol: f64,
    /// Expansion point for the root solve.
    pub x0: f64,
    /// Second point for the point-independence check.
    pub x1: f64,
    /// Largest `|delta(x1; root)| / |delta(x1; root +- probe)|` accepted.
    pub ratio_tol: f64,
}

impl TerminationSearch {
    pub fn new(lo: f64, hi: f64, x0: f64) -> Self {
        Self {
            lo,
            hi,
            step: 1e-3,
            tol: 1e-14,
            x0,
            x1: 2.0 * x0,
            ratio_tol: 1e-6,
        }
    }
}

/// Parameter value at which the iteration terminates at depth `level + 1`.
///
/// `build(param, x, order)` returns `(lam0, s0)` about `x`. Zeros of
/// `delta_{level+1}` at `x0` are kept when `delta_{level+1}` also vanishes at
/// `x1` (relative to its size a small step away). A terminating value stays
/// terminated at every later depth, so `delta_{level+1}` vanishes identically
/// at every level up to `level + 1`; the one returned is the value whose
/// earliest vanishing condition is at depth `level`, depth 0 meaning `s0`
/// itself vanishes.
pub fn ratio_condition_root<T, F>(build: F, level: usize, search: &TerminationSearch) -> Result<f64>
where
    T: Real,
    F: Fn(f64, f64, usize) -> Result<(Jet<T>, Jet<T>)>,
{
    let depth = level + 1;
    if !(search.lo < search.hi && search.step > 0.0 && search.tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "empty search interval [{}, {}] or non-positive step",
            search.lo, search.hi
        )));
    }
    if search.x0 == search.x1 {
        return Err(Error::InvalidInput("verification point must differ from x0".into()));
    }
    let delta_at = |param: f64, x: f64, k: usize| -> Result<DeltaEntry> {
        let (lam0, s0) = build(param, x, k + 1)?;
        Ok(*delta_sequence(&lam0, &s0, k)?.last())
    };
    // ln |condition k| with condition 0 being s0 itself
    let ln_condition = |param: f64, x: f64, k: usize| -> Result<f64> {
        if k == 0 {
            let (_, s0) = build(param, x, 1)?;
            Ok(s0.value().abs().to_f64().ln())
        } else {
            Ok(delta_at(param, x, k)?.ln_abs())
        }
    };
    // |condition(root)| relative to its size a probe step either side
    let flatness = |root: f64, x: f64, k: usize| -> Result<f64> {
        let probe = (1e6 * search.tol).max(1e-6 * root.abs().max(1e-3));
        let here = ln_condition(root, x, k)?;
        let near = ln_condition(root - probe, x, k)?.max(ln_condition(root + probe, x, k)?);
        Ok((here - near).exp())
    };

    let steps = ((search.hi - search.lo) / search.step).ceil() as usize;
    let mut roots = Vec::new();
    let mut prev: Option<(f64, i8)> = None;
    for i in 0..=steps {
        let p = (search.lo + i as f64 * search.step).min(search.hi);
        let sign = delta_at(p, search.x0, depth)?.sign;
        if sign == 0 {
            roots.push(p);
        } else if let Some((pp, ps)) = prev {
            if ps != 0 && ps != sign {
                let (mut a, mut b, sa) = (pp, p, ps);
                while b - a > search.tol {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    match delta_at(mid, search.x0, depth)?.sign {
                        0 => {
                            a = mid;
                            b = mid;
                        }
                        s if s == sa => a = mid,
                        _ => b = mid,
                    }
                }
                roots.push(0.5 * (a + b));
            }
        }
        prev = Some((p, sign));
    }
    if roots.is_empty() {
        return Err(Error::NoRoot {
            reason: format!("delta_{depth} has no sign change in [{}, {}]", search.lo, search.hi),
            sign_trace: String::new(),
        });
    }

    let mut best_residual = f64::INFINITY;
    let mut accepted = Vec::new();
    for root in roots {
        let residual = flatness(root, search.x1, depth)?;
        if residual > search.ratio_tol {
            best_residual = best_residual.min(residual);
            continue;
        }
        let mut first = depth;
        for k in 0..depth {
            if flatness(root, search.x1, k)? <= search.ratio_tol {
                first = k;
                break;
            }
        }
        if first == level {
            accepted.push((residual, root));
        }
    }
    accepted.sort_by(|a, b| a.0.total_cmp(&b.0));
    match accepted.first() {
        Some(&(_, root)) => Ok(root),
        None => Err(Error::NotExactlySolvable {
            x1: search.x1,
            residual: best_residual,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{build_coulomb, build_magnetic, ProblemSpec};
    use crate::real::DoubleF64;

    fn coulomb(m: i32) -> ProblemSpec {
        ProblemSpec::new(1.0, m, 0.0).unwrap()
    }

    #[test]
    fn first_coulomb_step_at_unit_radius() {
        // l' = 1/2, eps' = 1/2: lam0 = -2, lam0' = 3, s0 = 1/2, s0' = -1/2
        let (lam0, s0) = build_coulomb::<f64>(&coulomb(1), 0.5, 1.0, 4).unwrap();
        let it0 = AimIterate::initial(&lam0, &s0).unwrap();
        let raw = aim_step_with(&it0, &lam0, &s0, false).unwrap();
        assert!((raw.lam.value() - 7.5).abs() < 1e-13);
        assert!((raw.s.value() + 1.5).abs() < 1e-13);
        assert_eq!(raw.lam.order(), 3);

        let scaled = aim_step(&it0, &lam0, &s0).unwrap();
        let factor = scaled.log_scale.exp();
        assert!((scaled.lam.value() * factor - 7.5).abs() < 1e-12);
        assert!((scaled.s.value() * factor + 1.5).abs() < 1e-12);
        let max = scaled.lam.max_abs().max(scaled.s.max_abs());
        assert!(max > 0.5 && max <= 1.0, "{max}");
    }

    #[test]
    fn constant_inputs() {
        let (c, d) = (3.0, -2.0);
        let lam0 = Jet::constant(c, 3, 0.4).unwrap();
        let s0 = Jet::constant(d, 3, 0.4).unwrap();
        let it = aim_step_with(&AimIterate::initial(&lam0, &s0).unwrap(), &lam0, &s0, false).unwrap();
        assert_eq!(it.lam.value(), d + c * c);
        assert_eq!(it.s.value(), c * d);
    }

    #[test]
    fn zero_s0_gives_zero_s1() {
        let lam0 = Jet::from_coeffs(vec![1.0, -2.0, 0.5, 3.0], 1.0).unwrap();
        let s0 = Jet::zero(3, 1.0).unwrap();
        let it = aim_step_with(&AimIterate::initial(&lam0, &s0).unwrap(), &lam0, &s0, false).unwrap();
        assert!(it.s.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn step_errors() {
        let lam0 = Jet::constant(1.0, 0, 0.0).unwrap();
        let it = AimIterate::initial(&lam0, &lam0).unwrap();
        assert_eq!(aim_step(&it, &lam0, &lam0), Err(Error::OrderExhausted));

        let a = Jet::constant(1.0, 3, 0.0).unwrap();
        let b = Jet::constant(1.0, 3, 1.0).unwrap();
        assert!(matches!(AimIterate::initial(&a, &b), Err(Error::Mismatch { .. })));
    }

    #[test]
    fn order_budget() {
        let (lam0, s0) = build_coulomb::<f64>(&coulomb(0), 0.3, 1.5, 6).unwrap();
        let seq = delta_sequence(&lam0, &s0, 5).unwrap();
        assert_eq!(seq.values.len(), 5);
        assert_eq!(seq.last().k, 5);
        assert_eq!(delta_sequence(&lam0, &s0, 6), Err(Error::OrderExhausted));
    }

    #[test]
    fn sign_matches_scaled_value() {
        let spec = ProblemSpec::new(1.0, 0, 2.0).unwrap();
        let jets = build_magnetic::<DoubleF64>(&spec, 1.3, 41).unwrap();
        let seq = delta_sequence(&jets.lam0, &jets.s0, 40).unwrap();
        for e in &seq.values {
            assert_eq!(e.sign, Real::sign(e.scaled));
        }
    }

    #[test]
    fn ground_state_terminates_at_every_point() {
        // eps' = 1/(2(l'+1)) makes s0 vanish identically
        for (m, eps_prime) in [(0, 1.0), (1, 1.0 / 3.0)] {
            for rho0 in [0.7, 1.9, 4.2] {
                let (lam0, s0) = build_coulomb::<f64>(&coulomb(m), eps_prime, rho0, 3).unwrap();
                let seq = delta_sequence(&lam0, &s0, 2).unwrap();
                assert_eq!(seq.at(1).unwrap().sign, 0);
            }
        }
    }

    #[test]
    fn first_excited_state_terminates_at_depth_two() {
        let spec = coulomb(1);
        for rho0 in [0.8, 2.5] {
            let at = |e: f64| {
                let (l, s) = build_coulomb::<DoubleF64>(&spec, e, rho0, 4).unwrap();
                delta_sequence(&l, &s, 3).unwrap()
            };
            // eps' = 1/(2(l'+2)) = 0.2
            let exact = at(0.2);
            let off = at(0.21);
            assert!(exact.at(2).unwrap().ln_abs() - off.at(2).unwrap().ln_abs() < -25.0);
            assert!(exact.at(1).unwrap().sign != 0);
        }
    }

    #[test]
    fn termination_roots() {
        for (m, level, expected) in [(0, 0, 1.0), (1, 0, 1.0 / 3.0), (0, 2, 0.2)] {
            let spec = coulomb(m);
            let build = |e: f64, x: f64, order: usize| build_coulomb::<DoubleF64>(&spec, e, x, order);
            let root = ratio_condition_root(build, level, &TerminationSearch::new(0.05, 1.2, 1.3)).unwrap();
            assert!((root - expected).abs() < 1e-10, "m={m} level={level}: {root}");
        }
    }

    #[test]
    fn termination_search_errors() {
        let spec = coulomb(0);
        let build = |e: f64, x: f64, order: usize| build_coulomb::<DoubleF64>(&spec, e, x, order);
        // no terminating level inside (0.55, 0.9)
        let res = ratio_condition_root(build, 0, &TerminationSearch::new(0.55, 0.9, 1.0));
        assert!(matches!(
            res,
            Err(Error::NoRoot { .. }) | Err(Error::NotExactlySolvable { .. })
        ));
        let bad = TerminationSearch {
            x1: 1.0,
            ..TerminationSearch::new(0.1, 0.9, 1.0)
        };
        assert!(ratio_condition_root(build, 0, &bad).is_err());
    }

    #[test]
    fn magnetic_sequence_stays_finite_to_depth_100() {
        let spec = ProblemSpec::new(1.0, 1, 0.5).unwrap();
        for eps in [-1.0, 0.3, 5.0, 25.0] {
            let jets = build_magnetic::<DoubleF64>(&spec, eps, 101).unwrap();
            let seq = delta_sequence(&jets.lam0, &jets.s0, 100).unwrap();
            assert!(seq
                .values
                .iter()
                .all(|e| e.scaled.is_finite() && e.log_scale.is_finite()));
        }
    }
}
