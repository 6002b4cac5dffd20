//! Finite-difference reference eigenvalues for the scaled radial equation
//!
//! ```text
//! R'' + [eps + 1/rho - beta^2 rho^2 - l'(l'+1)/rho^2] R = 0
//! ```
//!
//! The regular solution behaves as `rho^{l'+1}`, so the solver works with
//! `g = R / rho^{l'+1}`, which satisfies the self-adjoint problem
//!
//! ```text
//! -(p g')' + p (beta^2 rho^2 - 1/rho) g = eps p g,   p = rho^{2|m|+1}
//! ```
//!
//! with `g` smooth at the origin. That removes the `1/rho^2` singularity that
//! ruins a direct discretization at m = 0. Nodes sit at `rho_i = i h`,
//! `i = 0..=N`, with `g = 0` at `rho_max = (N + 1) h`. Weights and potential
//! are cell averages over `[rho_i - h/2, rho_i + h/2]` clipped at 0, and `p`
//! is sampled at half nodes (`p_{-1/2} = 0`). After symmetrizing with the
//! mass the operator is a symmetric tridiagonal matrix whose eigenvalues are
//! found one by one with Sturm counts. The error is O(h^2); two grids h and
//! h/2 are combined by Richardson extrapolation.

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::problems::{eps_to_energy, EnergyLevel, ProblemSpec, Source};

/// Relative gap accepted between the oracle and another method.
pub const AGREEMENT_REL_TOL: f64 = 1e-5;
/// Absolute gap accepted instead when `|E| < 0.1`.
pub const AGREEMENT_ABS_TOL: f64 = 1e-6;

/// Whether two energies agree to oracle accuracy.
pub fn agrees(energy: f64, oracle: f64) -> bool {
    let gap = (energy - oracle).abs();
    gap <= AGREEMENT_REL_TOL * oracle.abs() || (oracle.abs() < 0.1 && gap <= AGREEMENT_ABS_TOL)
}

/// Relative eigenvalue shift below which auto-extension stops.
const EXTEND_TOL: f64 = 1e-10;
const MAX_DOUBLINGS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub rho_max: f64,
    /// Grid nodes strictly inside `[0, rho_max)`, counting the origin's
    /// neighbours; the step is `rho_max / (num_points + 1)`.
    pub num_points: usize,
    /// Double `rho_max` at fixed step until the levels stop moving.
    pub auto_extend: bool,
    /// Combine steps h and h/2; off returns the raw step-h values.
    pub richardson: bool,
}

impl GridConfig {
    /// Default grid for a problem: `rho_max = 40 / sqrt(max(beta, 0.05))`.
    pub fn for_problem(spec: &ProblemSpec) -> Self {
        Self {
            rho_max: 40.0 / spec.beta().max(0.05).sqrt(),
            num_points: 4000,
            auto_extend: true,
            richardson: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_points < 100 {
            return Err(Error::InvalidInput(format!(
                "num_points = {} is below the minimum of 100",
                self.num_points
            )));
        }
        if !(self.rho_max.is_finite() && self.rho_max > 0.0) {
            return Err(Error::InvalidInput(format!(
                "rho_max = {} must be positive",
                self.rho_max
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        self.rho_max / (self.num_points + 1) as f64
    }

    /// Same domain, step halved exactly.
    pub fn refined(&self) -> Self {
        Self {
            num_points: 2 * self.num_points + 1,
            ..*self
        }
    }

    /// Domain doubled, step unchanged.
    pub fn extended(&self) -> Self {
        Self {
            rho_max: 2.0 * self.rho_max,
            num_points: 2 * self.num_points + 1,
            ..*self
        }
    }
}

/// The symmetrized tridiagonal operator on one grid.
#[derive(Debug, Clone)]
pub struct Discretization {
    diag: Vec<f64>,
    off: Vec<f64>,
    h: f64,
}

impl Discretization {
    pub fn new(spec: &ProblemSpec, grid: &GridConfig) -> Result<Self> {
        grid.validate()?;
        let h = grid.step();
        let a = f64::from(2 * spec.m().abs() + 1);
        let beta2 = spec.beta() * spec.beta();
        let n = grid.num_points + 1;

        // cell average of rho^b over [max(rho - h/2, 0), rho + h/2]
        let avg = |i: usize, b: f64| {
            let rho = i as f64 * h;
            let lo = (rho - 0.5 * h).max(0.0);
            let hi = rho + 0.5 * h;
            (hi.powf(b + 1.0) - lo.powf(b + 1.0)) / ((b + 1.0) * h)
        };
        let p_half = |i: usize| ((i as f64 + 0.5) * h).powf(a);
        let inv_h2 = 1.0 / (h * h);

        let inv_sqrt_mass: Vec<f64> = (0..n).map(|i| 1.0 / avg(i, a).sqrt()).collect();
        let diag = (0..n)
            .map(|i| {
                let p_left = if i == 0 { 0.0 } else { p_half(i - 1) };
                let q = beta2 * avg(i, a + 2.0) - avg(i, a - 1.0);
                let w = inv_sqrt_mass[i];
                ((p_left + p_half(i)) * inv_h2 + q) * w * w
            })
            .collect();
        let off = (0..n - 1)
            .map(|i| -p_half(i) * inv_h2 * inv_sqrt_mass[i] * inv_sqrt_mass[i + 1])
            .collect();
        Ok(Self { diag, off, h })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// Matrix element `(i, j)`; zero off the three diagonals.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match i.abs_diff(j) {
            0 => self.diag[i],
            1 => self.off[i.min(j)],
            _ => 0.0,
        }
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.diag.len() {
            let coupling = if i == 0 {
                0.0
            } else {
                self.off[i - 1] * self.off[i - 1] / q
            };
            q = self.diag[i] - x - coupling;
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + self.off.get(i).map_or(0.0, |e| e.abs());
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `index`-th eigenvalue (0 = lowest) by bisection on Sturm counts.
    pub fn eigenvalue(&self, index: usize) -> Result<f64> {
        if index >= self.dim() {
            return Err(Error::InvalidInput(format!(
                "level {} requested from a {}-point grid",
                index + 1,
                self.dim()
            )));
        }
        let (mut lo, mut hi) = self.gershgorin();
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-15 * lo.abs().max(hi.abs()) {
                return Ok(mid);
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    pub fn lowest(&self, count: usize, execution: Execution) -> Result<Vec<f64>> {
        let indices: Vec<usize> = (0..count).collect();
        exec::map(execution, &indices, |&i| self.eigenvalue(i))
            .into_iter()
            .collect()
    }
}

/// Lowest `count` eps values on `grid`, no extrapolation or extension.
pub fn raw_eigenvalues(spec: &ProblemSpec, count: usize, grid: &GridConfig, execution: Execution) -> Result<Vec<f64>> {
    Discretization::new(spec, grid)?.lowest(count, execution)
}

pub fn fd_spectrum(spec: &ProblemSpec, num_levels: usize, grid: &GridConfig) -> Result<Vec<EnergyLevel>> {
    fd_spectrum_with(spec, num_levels, grid, Execution::default())
}

pub fn fd_spectrum_with(
    spec: &ProblemSpec,
    num_levels: usize,
    grid: &GridConfig,
    execution: Execution,
) -> Result<Vec<EnergyLevel>> {
    if num_levels == 0 {
        return Err(Error::InvalidInput("num_levels must be at least 1".into()));
    }
    grid.validate()?;

    let mut grid = *grid;
    let mut coarse = raw_eigenvalues(spec, num_levels, &grid, execution)?;
    if grid.auto_extend {
        let mut doublings = 0;
        loop {
            let wider = grid.extended();
            let next = raw_eigenvalues(spec, num_levels, &wider, execution)?;
            let settled = coarse
                .iter()
                .zip(&next)
                .all(|(a, b)| (a - b).abs() <= EXTEND_TOL * a.abs().max(1.0));
            if settled {
                break;
            }
            doublings += 1;
            grid = wider;
            coarse = next;
            if doublings >= MAX_DOUBLINGS {
                return Err(Error::TruncationFailure {
                    doublings,
                    rho_max: grid.rho_max,
                });
            }
        }
    }

    let eps = if grid.richardson {
        let fine = raw_eigenvalues(spec, num_levels, &grid.refined(), execution)?;
        coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect()
    } else {
        coarse
    };

    Ok(eps
        .into_iter()
        .enumerate()
        .map(|(i, eps)| EnergyLevel {
            n: i + 1,
            m: spec.m(),
            omega_l: spec.omega_l(),
            eps,
            energy: eps_to_energy(eps, spec),
            source: Source::Oracle,
            k_used: None,
            stabilized: true,
        })
        .collect())
}

pub fn fd_single(spec: &ProblemSpec, n: usize, grid: &GridConfig) -> Result<EnergyLevel> {
    if n == 0 {
        return Err(Error::InvalidInput("level index n starts at 1".into()));
    }
    let levels = fd_spectrum(spec, n, grid)?;
    Ok(levels[n - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m: i32, omega: f64) -> ProblemSpec {
        ProblemSpec::new(1.0, m, omega).unwrap()
    }

    #[test]
    fn grid_validation() {
        let g = GridConfig::for_problem(&spec(0, 2.0));
        assert!(GridConfig { num_points: 99, ..g }.validate().is_err());
        assert!(GridConfig { rho_max: 0.0, ..g }.validate().is_err());
        assert!(fd_spectrum(&spec(0, 2.0), 0, &g).is_err());
        assert!(fd_single(&spec(0, 2.0), 0, &g).is_err());
    }

    #[test]
    fn refined_grid_halves_the_step() {
        let g = GridConfig::for_problem(&spec(0, 1.0));
        assert_eq!(g.refined().step() * 2.0, g.step());
        assert_eq!(g.extended().step(), g.step());
    }

    #[test]
    fn default_rho_max() {
        // beta = 0.5 for omega = 2
        let g = GridConfig::for_problem(&spec(0, 2.0));
        assert!((g.rho_max - 40.0 / 0.5f64.sqrt()).abs() < 1e-12);
        let g0 = GridConfig::for_problem(&spec(0, 0.0));
        assert!((g0.rho_max - 40.0 / 0.05f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sturm_count_matches_eigenvalues() {
        let grid = GridConfig {
            rho_max: 30.0,
            num_points: 300,
            auto_extend: false,
            richardson: false,
        };
        let d = Discretization::new(&spec(0, 1.0), &grid).unwrap();
        let ev = d.lowest(4, Execution::Sequential).unwrap();
        for (i, e) in ev.iter().enumerate() {
            assert_eq!(d.count_below(e - 1e-9), i);
            assert_eq!(d.count_below(e + 1e-9), i + 1);
        }
    }

    #[test]
    fn zero_field_ground_state() {
        let s = spec(0, 0.0);
        let e = fd_single(&s, 1, &GridConfig::for_problem(&s)).unwrap();
        assert!((e.energy + 2.0).abs() < 1e-5, "{}", e.energy);
        assert_eq!(e.source, Source::Oracle);
    }
}
