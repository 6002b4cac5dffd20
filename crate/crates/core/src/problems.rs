//! Physical inputs mapped onto AIM problems.
//!
//! In atomic units the radial equation, after `r = rho / 2Z`, reads
//!
//! ```text
//! R'' + [eps + 1/rho - beta^2 rho^2 - l'(l'+1)/rho^2] R = 0
//! eps = (E - m w) / 2Z^2,   beta = w / 4Z^2,   l' = |m| - 1/2
//! ```
//!
//! With no field the ansatz `rho^{l'+1} exp(-eps' rho) f` (eps = -eps'^2)
//! gives the Coulomb form. With a field, `rho = u^2`, `R = u^{1/2} chi` and
//! `chi = u^{Lambda+1} exp(-alpha u^4 / 4) f` give the magnetic form, expanded
//! about `u0 = ((Lambda+1)/alpha)^{1/4}`, the root of `lam0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::real::Real;

/// Larmor frequencies below this are treated as zero field.
pub const ZERO_FIELD_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    z: f64,
    m: i32,
    omega_l: f64,
    lprime: f64,
    beta: f64,
    alpha: f64,
    lambda: f64,
    u0: Option<f64>,
}

impl ProblemSpec {
    pub fn new(z: f64, m: i32, omega_l: f64) -> Result<Self> {
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::InvalidInput(format!("nuclear charge Z = {z} must be positive")));
        }
        if !(omega_l.is_finite() && omega_l >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "Larmor frequency {omega_l} must be finite and non-negative"
            )));
        }
        let lprime = f64::from(m.unsigned_abs()) - 0.5;
        let beta = omega_l / (4.0 * z * z);
        let alpha = 2.0 * beta;
        let lambda = 2.0 * lprime + 0.5;
        let u0 = (omega_l >= ZERO_FIELD_THRESHOLD).then(|| ((lambda + 1.0) / alpha).powf(0.25));
        Ok(Self {
            z,
            m,
            omega_l,
            lprime,
            beta,
            alpha,
            lambda,
            u0,
        })
    }

    /// Same charge and angular momentum, different field.
    pub fn with_omega(&self, omega_l: f64) -> Result<Self> {
        Self::new(self.z, self.m, omega_l)
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn m(&self) -> i32 {
        self.m
    }

    pub fn omega_l(&self) -> f64 {
        self.omega_l
    }

    /// Regular branch of `l'(l'+1) = m^2 - 1/4`.
    pub fn lprime(&self) -> f64 {
        self.lprime
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Expansion point of the magnetic form; `None` without a field.
    pub fn u0(&self) -> Option<f64> {
        self.u0
    }

    pub fn is_field_free(&self) -> bool {
        self.u0.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Analytic,
    Aim,
    Oracle,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Analytic => "analytic",
            Source::Aim => "aim",
            Source::Oracle => "oracle",
        }
    }
}

impl std::fmt::Display for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A labeled eigenvalue. `n` counts from 1 at the ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyLevel {
    pub n: usize,
    pub m: i32,
    pub omega_l: f64,
    pub eps: f64,
    pub energy: f64,
    pub source: Source,
    /// Deepest iteration used (AIM only).
    pub k_used: Option<usize>,
    pub stabilized: bool,
}

/// `omega_L` from its reciprocal. Every reciprocal input goes through here.
pub fn omega_from_inverse(inverse: f64) -> Result<f64> {
    if !(inverse.is_finite() && inverse > 0.0) {
        return Err(Error::InvalidInput(format!("omega_L^-1 = {inverse} must be positive")));
    }
    Ok(1.0 / inverse)
}

pub fn eps_to_energy(eps: f64, spec: &ProblemSpec) -> f64 {
    2.0 * spec.z * spec.z * eps + f64::from(spec.m) * spec.omega_l
}

pub fn energy_to_eps(energy: f64, spec: &ProblemSpec) -> f64 {
    (energy - f64::from(spec.m) * spec.omega_l) / (2.0 * spec.z * spec.z)
}

/// Closed-form zero-field level, `E = -Z^2 / (2 (|m| + n - 1/2)^2)`.
pub fn analytic_energy(n: usize, m: i32, z: f64) -> Result<EnergyLevel> {
    if n < 1 {
        return Err(Error::InvalidInput("level index n starts at 1".into()));
    }
    let spec = ProblemSpec::new(z, m, 0.0)?;
    let eps_prime = analytic_eps_prime(n, &spec);
    let eps = -eps_prime * eps_prime;
    Ok(EnergyLevel {
        n,
        m,
        omega_l: 0.0,
        eps,
        energy: eps_to_energy(eps, &spec),
        source: Source::Analytic,
        k_used: None,
        stabilized: true,
    })
}

/// `eps'_{n-1} = 1 / (2 (l' + n))` for the table-convention level `n >= 1`.
pub fn analytic_eps_prime(n: usize, spec: &ProblemSpec) -> f64 {
    1.0 / (2.0 * (spec.lprime + n as f64))
}

/// `(lam0, s0)` of the zero-field form about `rho0`:
/// `lam0 = 2 (eps' rho - l' - 1) / rho`, `s0 = (2 eps' l' + 2 eps' - 1) / rho`.
pub fn build_coulomb<T: Real>(spec: &ProblemSpec, eps_prime: f64, rho0: f64, order: usize) -> Result<(Jet<T>, Jet<T>)> {
    if !spec.is_field_free() {
        return Err(Error::WrongForm("Coulomb form needs omega_L = 0"));
    }
    if !(rho0.is_finite() && rho0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "expansion point rho0 = {rho0} must be positive"
        )));
    }
    if !eps_prime.is_finite() {
        return Err(Error::InvalidInput(format!("eps' = {eps_prime} is not finite")));
    }
    let inv_rho = reciprocal_powers::<T>(rho0, order);
    let lp1 = T::from_f64(spec.lprime + 1.0);
    let ep = T::from_f64(eps_prime);
    let two = T::from_f64(2.0);

    let mut lam0: Vec<T> = inv_rho.iter().map(|&c| -(two * lp1) * c).collect();
    lam0[0] += two * ep;
    let s_coeff = two * ep * lp1 - T::one();
    let s0: Vec<T> = inv_rho.iter().map(|&c| s_coeff * c).collect();
    Ok((Jet::from_coeffs(lam0, rho0)?, Jet::from_coeffs(s0, rho0)?))
}

/// `(lam0, s0)` of the magnetic form about the problem's `u0`.
pub fn build_magnetic<T: Real>(spec: &ProblemSpec, eps: f64, order: usize) -> Result<MagneticJets<T>> {
    let u0 = spec.u0.ok_or(Error::WrongForm(
        "magnetic form needs omega_L > 0; use the Coulomb form",
    ))?;
    build_magnetic_at(spec, eps, order, u0)
}

/// Magnetic form about an arbitrary positive expansion point.
pub fn build_magnetic_at<T: Real>(spec: &ProblemSpec, eps: f64, order: usize, x0: f64) -> Result<MagneticJets<T>> {
    let base = MagneticBase::<T>::new(spec, order, x0)?;
    base.at_eps(eps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagneticJets<T = f64> {
    pub lam0: Jet<T>,
    pub s0: Jet<T>,
    pub x0: f64,
}

/// The eps-independent part of the magnetic form, reusable across an eps scan:
/// `lam0 = 2 (alpha u^3 - (Lambda+1)/u)` and
/// `s0 = [(2 Lambda + 5) alpha - 4 eps] u^2 - 4`.
#[derive(Debug, Clone)]
pub struct MagneticBase<T = f64> {
    lam0: Jet<T>,
    u_squared: Vec<T>,
    alpha_term: T,
    x0: f64,
}

impl<T: Real> MagneticBase<T> {
    pub fn new(spec: &ProblemSpec, order: usize, x0: f64) -> Result<Self> {
        if spec.is_field_free() {
            return Err(Error::WrongForm(
                "magnetic form needs omega_L > 0; use the Coulomb form",
            ));
        }
        if !(x0.is_finite() && x0 > 0.0) {
            return Err(Error::InvalidInput(format!(
                "expansion point u0 = {x0} must be positive"
            )));
        }
        let alpha = T::from_f64(spec.alpha);
        let lp1 = T::from_f64(spec.lambda + 1.0);
        let two = T::from_f64(2.0);
        let u = T::from_f64(x0);

        let inv_u = reciprocal_powers::<T>(x0, order);
        let cube = [u * u * u, T::from_f64(3.0) * u * u, T::from_f64(3.0) * u, T::one()];
        let lam0 = (0..=order)
            .map(|j| {
                let poly = cube.get(j).copied().unwrap_or_else(T::zero);
                two * (alpha * poly - lp1 * inv_u[j])
            })
            .collect();
        let mut u_squared = vec![T::zero(); order + 1];
        for (j, c) in [u * u, two * u, T::one()].into_iter().enumerate() {
            if j <= order {
                u_squared[j] = c;
            }
        }
        let alpha_term = T::from_f64(2.0 * spec.lambda + 5.0) * alpha;
        Ok(Self {
            lam0: Jet::from_coeffs(lam0, x0)?,
            u_squared,
            alpha_term,
            x0,
        })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn lam0(&self) -> &Jet<T> {
        &self.lam0
    }

    pub fn s0(&self, eps: f64) -> Result<Jet<T>> {
        if !eps.is_finite() {
            return Err(Error::InvalidInput(format!("eps = {eps} is not finite")));
        }
        let c = self.alpha_term - T::from_f64(4.0) * T::from_f64(eps);
        let mut s0: Vec<T> = self.u_squared.iter().map(|&p| c * p).collect();
        s0[0] += T::from_f64(-4.0);
        Jet::from_coeffs(s0, self.x0)
    }

    pub fn at_eps(&self, eps: f64) -> Result<MagneticJets<T>> {
        Ok(MagneticJets {
            lam0: self.lam0.clone(),
            s0: self.s0(eps)?,
            x0: self.x0,
        })
    }
}

/// Taylor coefficients of `1/x` about `x0`: `(-1)^j / x0^{j+1}`.
fn reciprocal_powers<T: Real>(x0: f64, order: usize) -> Vec<T> {
    let inv = T::one() / T::from_f64(x0);
    let mut out = Vec::with_capacity(order + 1);
    let mut term = inv;
    for _ in 0..=order {
        out.push(term);
        term = -(term * inv);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn derived_parameters() {
        let spec = ProblemSpec::new(1.0, 0, 2.0).unwrap();
        assert_eq!(spec.beta(), 0.5);
        assert_eq!(spec.alpha(), 1.0);
        assert_eq!(spec.lambda(), -0.5);
        assert_relative_eq!(spec.u0().unwrap(), 0.840_896_4, epsilon = 1e-7);

        let spec = ProblemSpec::new(1.0, 1, 2.0 / 3.0).unwrap();
        assert_relative_eq!(spec.beta(), 1.0 / 6.0, epsilon = 1e-15);
        assert_relative_eq!(spec.alpha(), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(spec.lambda(), 1.5);
        assert_relative_eq!(spec.u0().unwrap(), 1.654_875_5, epsilon = 1e-7);
    }

    #[test]
    fn lprime_solves_centrifugal_relation() {
        for m in -6..=6 {
            let spec = ProblemSpec::new(1.0, m, 0.3).unwrap();
            let l = spec.lprime();
            let m2 = f64::from(m * m);
            assert!((l * (l + 1.0) - (m2 - 0.25)).abs() < 1e-14);
            assert!(spec.lambda() + 1.0 > 0.0);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(ProblemSpec::new(0.0, 0, 1.0).is_err());
        assert!(ProblemSpec::new(-1.0, 0, 1.0).is_err());
        assert!(ProblemSpec::new(1.0, 0, -0.1).is_err());
        assert!(ProblemSpec::new(1.0, 0, f64::NAN).is_err());
        assert!(ProblemSpec::new(1.0, 0, 1e-11).unwrap().is_field_free());
    }

    #[test]
    fn lam0_vanishes_at_u0() {
        for (m, w) in [(0, 2.0), (1, 2.0 / 3.0), (2, 0.05), (0, 4.5)] {
            let spec = ProblemSpec::new(1.0, m, w).unwrap();
            let jets = build_magnetic::<f64>(&spec, 0.3, 4).unwrap();
            let scale = jets.lam0.max_abs();
            assert!(jets.lam0.value().abs() <= 1e-12 * scale, "m={m} w={w}");
        }
    }

    #[test]
    fn magnetic_form_dispatch() {
        let free = ProblemSpec::new(1.0, 0, 0.0).unwrap();
        assert!(matches!(build_magnetic::<f64>(&free, 0.0, 4), Err(Error::WrongForm(_))));
        let field = ProblemSpec::new(1.0, 0, 1.0).unwrap();
        assert!(matches!(
            build_coulomb::<f64>(&field, 0.5, 1.0, 4),
            Err(Error::WrongForm(_))
        ));
        assert!(matches!(
            build_coulomb::<f64>(&free, 0.5, 0.0, 4),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn magnetic_s0_is_linear_in_eps() {
        let spec = ProblemSpec::new(1.0, 1, 0.75).unwrap();
        let (e1, e2) = (1.3, -0.4);
        let a = build_magnetic::<f64>(&spec, e1, 6).unwrap();
        let b = build_magnetic::<f64>(&spec, e2, 6).unwrap();
        let diff = a.s0.checked_sub(&b.s0).unwrap();
        let u = spec.u0().unwrap();
        let expect = [u * u, 2.0 * u, 1.0, 0.0, 0.0, 0.0, 0.0].map(|c| -4.0 * (e1 - e2) * c);
        for (d, e) in diff.coeffs().iter().zip(expect) {
            assert!((d - e).abs() <= 1e-14 * e.abs().max(1.0));
        }
    }

    #[test]
    fn coulomb_values_at_rho_one() {
        let free = ProblemSpec::new(1.0, 1, 0.0).unwrap();
        let (lam0, s0) = build_coulomb::<f64>(&free, 0.5, 1.0, 3).unwrap();
        assert_eq!(lam0.value(), -2.0);
        assert_eq!(s0.value(), 0.5);

        let ground = ProblemSpec::new(1.0, 0, 0.0).unwrap();
        let (_, s0) = build_coulomb::<f64>(&ground, 1.0, 1.0, 3).unwrap();
        assert_eq!(s0.value(), 0.0);
    }

    #[test]
    fn coulomb_lam0_zero_at_turning_point() {
        let spec = ProblemSpec::new(1.0, 2, 0.0).unwrap();
        let ep = 0.3;
        let rho = (spec.lprime() + 1.0) / ep;
        let (lam0, _) = build_coulomb::<f64>(&spec, ep, rho, 2).unwrap();
        assert!(lam0.value().abs() < 1e-15);
        let (lam0, _) = build_coulomb::<f64>(&spec, ep, 1.1 * rho, 2).unwrap();
        assert!(lam0.value().abs() > 1e-3);
    }

    #[test]
    fn analytic_levels() {
        assert_eq!(analytic_energy(1, 0, 1.0).unwrap().energy, -2.0);
        assert_relative_eq!(analytic_energy(2, 0, 1.0).unwrap().energy, -2.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(analytic_energy(3, 1, 1.0).unwrap().energy, -2.0 / 49.0, epsilon = 1e-15);
        assert!(matches!(analytic_energy(0, 0, 1.0), Err(Error::InvalidInput(_))));
        assert_eq!(analytic_energy(1, 0, 1.0).unwrap().source, Source::Analytic);
    }

    #[test]
    fn energy_conversions() {
        let spec = ProblemSpec::new(1.0, 0, 2.0).unwrap();
        assert_eq!(eps_to_energy(2.0, &spec), 4.0);
        let spec = ProblemSpec::new(1.0, 1, 2.0 / 3.0).unwrap();
        assert_relative_eq!(eps_to_energy(1.0, &spec), 8.0 / 3.0, epsilon = 1e-15);
        let spec = ProblemSpec::new(1.7, -3, 0.35).unwrap();
        for x in [-2.0, -0.1, 0.0, 3.3] {
            assert_relative_eq!(energy_to_eps(eps_to_energy(x, &spec), &spec), x, epsilon = 1e-15);
        }
    }
}
