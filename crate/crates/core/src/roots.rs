//! Eigenvalues as eps-roots of the quantization sequence.
//!
//! `scan_roots` samples the sign of `delta_{k_max}` on an eps grid, bisects
//! every sign change, then re-solves each root at `k_max - 1` and
//! `k_max - 2`. A root is kept only when successive depths agree within
//! `stab_tol`; `delta_k` has extraneous zeros at finite k that wander as k
//! grows, and those are discarded.
//!
//! The recursion runs in double-double arithmetic (see [`crate::real`]).

use log::debug;

use crate::aim::{delta_sequence, ratio_condition_root, DeltaSequence, TerminationSearch};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::problems::{analytic_energy, build_coulomb, eps_to_energy, EnergyLevel, MagneticBase, ProblemSpec, Source};
use crate::real::DoubleF64;

/// Grid points evaluated per batch before refining the brackets they contain.
const CHUNK: usize = 64;

const MIN_GRID_STEP: f64 = 4e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub eps_min: f64,
    pub eps_max: f64,
    pub grid_step: f64,
    pub k_max: usize,
    /// Stabilization never compares roots from depths below this.
    pub k_min: usize,
    pub stab_tol: f64,
    pub bisect_tol: f64,
    pub max_levels: usize,
    /// Expansion point as a multiple of the problem's `u0`.
    pub expansion_scale: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            eps_min: -3.0,
            eps_max: 30.0,
            grid_step: 0.02,
            k_max: 60,
            k_min: 20,
            stab_tol: 1e-8,
            bisect_tol: 1e-10,
            max_levels: 12,
            expansion_scale: 1.0,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if !(self.eps_min.is_finite() && self.eps_max.is_finite() && self.eps_min < self.eps_max) {
            return bad(format!("eps range [{}, {}] is empty", self.eps_min, self.eps_max));
        }
        if !(self.grid_step > 0.0 && self.grid_step < self.eps_max - self.eps_min) {
            return bad(format!("grid step {} does not fit the eps range", self.grid_step));
        }
        if self.k_min >= self.k_max || self.k_max < 2 {
            return bad(format!("need k_min < k_max (got {} and {})", self.k_min, self.k_max));
        }
        if !(self.stab_tol > 0.0 && self.bisect_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.max_levels == 0 {
            return bad("max_levels must be at least 1".into());
        }
        if !(self.expansion_scale.is_finite() && self.expansion_scale > 0.0) {
            return bad(format!("expansion scale {} must be positive", self.expansion_scale));
        }
        Ok(())
    }

    /// Same config with the grid refined for weak fields, where levels crowd
    /// towards eps = 0 with spacing of order `omega_L / Z^2`. Never coarser
    /// than the configured step, never finer than `MIN_GRID_STEP`.
    pub fn adapted_to(&self, spec: &ProblemSpec) -> Self {
        let scale = spec.omega_l() / (spec.z() * spec.z());
        Self {
            grid_step: self.grid_step.min((scale / 8.0).max(MIN_GRID_STEP)),
            ..*self
        }
    }

    /// Depths used for the stabilization check, deepest first.
    fn depths(&self) -> Vec<usize> {
        (0..3)
            .filter_map(|d| self.k_max.checked_sub(d))
            .filter(|&k| k >= self.k_min.max(1))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootCandidate {
    /// Root at the deepest iteration.
    pub eps: f64,
    /// `(k, eps_k)` in increasing k.
    pub history: Vec<(usize, f64)>,
    pub stabilized: bool,
    /// 1-based level label; 0 until assigned.
    pub level_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootScan {
    /// Stabilized roots, ascending, labeled 1, 2, ...
    pub roots: Vec<RootCandidate>,
    /// Sign changes that failed the stabilization check.
    pub discarded: Vec<RootCandidate>,
    pub warnings: Vec<String>,
    pub expansion_point: f64,
}

/// `delta_k(eps)` for a magnetic problem at a fixed expansion point.
#[derive(Debug, Clone)]
pub struct DeltaEvaluator {
    base: MagneticBase<DoubleF64>,
    k_max: usize,
}

impl DeltaEvaluator {
    pub fn new(spec: &ProblemSpec, k_max: usize, expansion_point: f64) -> Result<Self> {
        // order budget: delta_{k_max} needs k_max + 1 orders, one spare
        let base = MagneticBase::new(spec, k_max + 2, expansion_point)?;
        Ok(Self { base, k_max })
    }

    /// Evaluator at the problem's own `u0`.
    pub fn at_u0(spec: &ProblemSpec, k_max: usize) -> Result<Self> {
        let u0 = spec.u0().ok_or(Error::WrongForm(
            "magnetic form needs omega_L > 0; use the Coulomb form",
        ))?;
        Self::new(spec, k_max, u0)
    }

    pub fn expansion_point(&self) -> f64 {
        self.base.x0()
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn sequence(&self, eps: f64) -> Result<DeltaSequence> {
        let s0 = self.base.s0(eps)?;
        delta_sequence(self.base.lam0(), &s0, self.k_max)
    }

    /// Sign of `delta_k(eps)`. Only the orders `delta_k` depends on are used.
    pub fn sign(&self, eps: f64, k: usize) -> Result<i8> {
        if k == 0 || k > self.k_max {
            return Err(Error::InvalidInput(format!("k = {k} outside 1..={}", self.k_max)));
        }
        let lam0 = self.base.lam0().truncate(k + 1)?;
        let s0 = self.base.s0(eps)?.truncate(k + 1)?;
        Ok(delta_sequence(&lam0, &s0, k)?.last().sign)
    }
}

/// Bisect `delta_k` on `bracket` until the interval is at most `tol` wide.
pub fn refine_root(spec: &ProblemSpec, bracket: (f64, f64), k: usize, tol: f64) -> Result<f64> {
    let eval = DeltaEvaluator::at_u0(spec, k)?;
    bisect(&eval, bracket, k, tol)
}

pub fn bisect(eval: &DeltaEvaluator, bracket: (f64, f64), k: usize, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = if bracket.0 <= bracket.1 {
        bracket
    } else {
        (bracket.1, bracket.0)
    };
    let s_lo = eval.sign(lo, k)?;
    let s_hi = eval.sign(hi, k)?;
    if s_lo == 0 {
        return Ok(lo);
    }
    if s_hi == 0 {
        return Ok(hi);
    }
    if s_lo == s_hi {
        return Err(Error::InvalidBracket { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match eval.sign(mid, k)? {
            0 => return Ok(mid),
            s if s == s_lo => lo = mid,
            _ => hi = mid,
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest bracket around `center` (growing by 8x, capped at `max_half_width`)
/// on which `delta_k` changes sign.
fn local_bracket(
    eval: &DeltaEvaluator,
    center: f64,
    k: usize,
    start: f64,
    max_half_width: f64,
) -> Result<Option<(f64, f64)>> {
    let mut d = start;
    while d <= max_half_width {
        let (a, b) = (center - d, center + d);
        let (sa, sb) = (eval.sign(a, k)?, eval.sign(b, k)?);
        if sa == 0 || sb == 0 || sa != sb {
            return Ok(Some((a, b)));
        }
        d *= 8.0;
    }
    Ok(None)
}

fn refine_candidate(eval: &DeltaEvaluator, bracket: (f64, f64), cfg: &ScanConfig) -> Result<RootCandidate> {
    let depths = cfg.depths();
    let mut history = Vec::with_capacity(depths.len());
    let mut root = bisect(eval, bracket, depths[0], cfg.bisect_tol)?;
    history.push((depths[0], root));
    let mut complete = true;
    for &k in &depths[1..] {
        let start = (4.0 * cfg.bisect_tol).max(cfg.stab_tol);
        match local_bracket(eval, root, k, start, cfg.grid_step)? {
            Some(b) => {
                root = bisect(eval, b, k, cfg.bisect_tol)?;
                history.push((k, root));
            }
            None => {
                complete = false;
                break;
            }
        }
    }
    history.reverse();
    let stabilized =
        complete && history.len() >= 2 && history.windows(2).all(|w| (w[1].1 - w[0].1).abs() <= cfg.stab_tol);
    Ok(RootCandidate {
        eps: history.last().map_or(root, |h| h.1),
        history,
        stabilized,
        level_index: 0,
    })
}

pub fn scan_roots(spec: &ProblemSpec, cfg: &ScanConfig) -> Result<RootScan> {
    scan_roots_with(spec, cfg, Execution::default())
}

pub fn scan_roots_with(spec: &ProblemSpec, cfg: &ScanConfig, execution: Execution) -> Result<RootScan> {
    cfg.validate()?;
    let u0 = spec
        .u0()
        .ok_or(Error::WrongForm("root scan needs omega_L > 0; zero field is analytic"))?;
    let eval = DeltaEvaluator::new(spec, cfg.k_max, u0 * cfg.expansion_scale)?;

    let steps = ((cfg.eps_max - cfg.eps_min) / cfg.grid_step).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|i| cfg.eps_min + i as f64 * cfg.grid_step).collect();
    if cfg.eps_max - grid[steps] > 1e-12 {
        grid.push(cfg.eps_max);
    }

    let mut roots: Vec<RootCandidate> = Vec::new();
    let mut discarded = Vec::new();
    let mut trace = String::with_capacity(grid.len());
    let mut prev: Option<(f64, i8)> = None;

    for chunk in grid.chunks(CHUNK) {
        let signs = exec::map(execution, chunk, |&e| eval.sign(e, cfg.k_max))
            .into_iter()
            .collect::<Result<Vec<i8>>>()?;
        trace.extend(signs.iter().map(|s| match s {
            1 => '+',
            -1 => '-',
            _ => '0',
        }));

        let mut brackets = Vec::new();
        for (&e, &s) in chunk.iter().zip(&signs) {
            if s == 0 {
                brackets.push((e, e));
            } else if let Some((pe, ps)) = prev {
                if ps != 0 && ps != s {
                    brackets.push((pe, e));
                }
            }
            prev = Some((e, s));
        }

        let refined = exec::map(execution, &brackets, |&b| refine_candidate(&eval, b, cfg))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        for cand in refined {
            if cand.stabilized {
                roots.push(cand);
            } else {
                debug!(
                    "discarding unstabilized root near eps = {:.8} (history {:?})",
                    cand.eps, cand.history
                );
                discarded.push(cand);
            }
        }
        if roots.len() >= cfg.max_levels {
            break;
        }
    }

    if roots.is_empty() {
        return Err(Error::NoRoot {
            reason: format!(
                "no stabilized root of delta_{} in eps [{}, {}] ({} sign changes discarded)",
                cfg.k_max,
                cfg.eps_min,
                cfg.eps_max,
                discarded.len()
            ),
            sign_trace: trace,
        });
    }

    roots.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    roots.dedup_by(|b, a| (b.eps - a.eps).abs() <= cfg.bisect_tol);
    roots.truncate(cfg.max_levels);
    let mut warnings = Vec::new();
    for w in roots.windows(2) {
        if w[1].eps - w[0].eps < cfg.grid_step {
            warnings.push(format!(
                "grid too coarse: roots at eps = {:.8} and {:.8} are closer than grid_step = {}",
                w[0].eps, w[1].eps, cfg.grid_step
            ));
        }
    }
    if let Some(top) = roots.last() {
        let below = discarded.iter().filter(|d| d.eps < top.eps).count();
        if below > 0 {
            warnings.push(format!(
                "{below} unstabilized sign change(s) below eps = {:.8}; if any is a real level the \
                 labels above it are shifted (raise k_max and check with verify)",
                top.eps
            ));
        }
    }
    for (i, r) in roots.iter_mut().enumerate() {
        r.level_index = i + 1;
    }

    Ok(RootScan {
        roots,
        discarded,
        warnings,
        expansion_point: eval.expansion_point(),
    })
}

pub fn solve_spectrum(spec: &ProblemSpec, n_list: &[usize], cfg: &ScanConfig) -> Result<Vec<EnergyLevel>> {
    solve_spectrum_with(spec, n_list, cfg, Execution::default())
}

/// Levels `n_list` (1 = ground state). Zero field uses the closed form;
/// otherwise the AIM scan on a grid adapted to the field strength.
pub fn solve_spectrum_with(
    spec: &ProblemSpec,
    n_list: &[usize],
    cfg: &ScanConfig,
    execution: Execution,
) -> Result<Vec<EnergyLevel>> {
    if n_list.is_empty() {
        return Err(Error::InvalidInput("no levels requested".into()));
    }
    if n_list.contains(&0) {
        return Err(Error::InvalidInput("level index n starts at 1".into()));
    }
    let mut wanted = n_list.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    let highest = *wanted.last().unwrap();

    if spec.is_field_free() {
        return wanted
            .iter()
            .map(|&n| {
                let mut level = analytic_energy(n, spec.m(), spec.z())?;
                level.omega_l = spec.omega_l();
                level.energy = eps_to_energy(level.eps, spec);
                Ok(level)
            })
            .collect();
    }

    let scan_cfg = ScanConfig {
        max_levels: highest,
        ..cfg.adapted_to(spec)
    };
    let scan = scan_roots_with(spec, &scan_cfg, execution)?;
    for w in &scan.warnings {
        log::warn!("{w}");
    }
    if scan.roots.len() < highest {
        return Err(Error::InsufficientBracket {
            requested: highest,
            found: scan.roots.len(),
        });
    }
    Ok(wanted
        .iter()
        .map(|&n| {
            let root = &scan.roots[n - 1];
            EnergyLevel {
                n,
                m: spec.m(),
                omega_l: spec.omega_l(),
                eps: root.eps,
                energy: eps_to_energy(root.eps, spec),
                source: Source::Aim,
                k_used: Some(cfg.k_max),
                stabilized: root.stabilized,
            }
        })
        .collect())
}

/// Zero-field `eps'` of level `n` (0 = ground state) from exact termination
/// of the iteration about `rho0`.
pub fn terminating_eps_prime(spec: &ProblemSpec, n: usize, rho0: f64) -> Result<f64> {
    if !spec.is_field_free() {
        return Err(Error::WrongForm("exact termination needs omega_L = 0"));
    }
    // strictly below the next terminating value
    let lo = 0.5 / (spec.lprime() + n as f64 + 3.0);
    let search = TerminationSearch {
        step: (lo / 20.0).min(1e-3),
        ..TerminationSearch::new(lo, 1.5, rho0)
    };
    let build = |e: f64, x: f64, order: usize| build_coulomb::<DoubleF64>(spec, e, x, order);
    ratio_condition_root(build, n, &search)
}

/// Stabilized root nearest `target` among those within `half_width` of it.
pub fn nearest_root(spec: &ProblemSpec, target: f64, half_width: f64, cfg: &ScanConfig) -> Result<RootCandidate> {
    let window = ScanConfig {
        eps_min: target - half_width,
        eps_max: target + half_width,
        max_levels: usize::MAX,
        ..*cfg
    };
    let scan = scan_roots(spec, &window)?;
    let best = scan
        .roots
        .into_iter()
        .min_by(|a, b| (a.eps - target).abs().total_cmp(&(b.eps - target).abs()))
        .expect("scan returns at least one root");
    Ok(RootCandidate { level_index: 0, ..best })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_termination() {
        for m in [0, 1, 2] {
            let spec = ProblemSpec::new(1.0, m, 0.0).unwrap();
            for n in 0..4 {
                let e = terminating_eps_prime(&spec, n, 1.7).unwrap();
                assert!((e - 0.5 / (spec.lprime() + n as f64 + 1.0)).abs() < 1e-10);
            }
        }
        let magnetic = ProblemSpec::new(1.0, 0, 1.0).unwrap();
        assert!(matches!(
            terminating_eps_prime(&magnetic, 0, 1.0),
            Err(Error::WrongForm(_))
        ));
    }

    #[test]
    fn default_config_is_valid() {
        ScanConfig::default().validate().unwrap();
        assert_eq!(ScanConfig::default().depths(), vec![60, 59, 58]);
    }

    #[test]
    fn invalid_configs() {
        let base = ScanConfig::default();
        for cfg in [
            ScanConfig {
                eps_min: 1.0,
                eps_max: 1.0,
                ..base
            },
            ScanConfig { grid_step: 0.0, ..base },
            ScanConfig {
                grid_step: 100.0,
                ..base
            },
            ScanConfig { k_min: 60, ..base },
            ScanConfig { stab_tol: 0.0, ..base },
            ScanConfig { max_levels: 0, ..base },
            ScanConfig {
                expansion_scale: -1.0,
                ..base
            },
        ] {
            assert!(matches!(cfg.validate(), Err(Error::InvalidInput(_))), "{cfg:?}");
        }
    }

    #[test]
    fn refine_requires_a_sign_change() {
        let spec = ProblemSpec::new(1.0, 0, 2.0).unwrap();
        assert!(matches!(
            refine_root(&spec, (2.2, 2.3), 30, 1e-10),
            Err(Error::InvalidBracket { .. })
        ));
    }

    #[test]
    fn scan_rejects_zero_field() {
        let spec = ProblemSpec::new(1.0, 0, 0.0).unwrap();
        assert!(matches!(
            scan_roots(&spec, &ScanConfig::default()),
            Err(Error::WrongForm(_))
        ));
    }

    #[test]
    fn solve_rejects_bad_level_lists() {
        let spec = ProblemSpec::new(1.0, 0, 1.0).unwrap();
        let cfg = ScanConfig::default();
        assert!(solve_spectrum(&spec, &[], &cfg).is_err());
        assert!(solve_spectrum(&spec, &[0, 1], &cfg).is_err());
    }

    #[test]
    fn narrow_range_reports_insufficient_bracket() {
        let spec = ProblemSpec::new(1.0, 0, 2.0).unwrap();
        let cfg = ScanConfig {
            eps_min: -1.0,
            eps_max: 1.0,
            ..ScanConfig::default()
        };
        match solve_spectrum(&spec, &[1, 2], &cfg) {
            Err(Error::InsufficientBracket { requested: 2, found: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_range_reports_no_root_with_trace() {
        let spec = ProblemSpec::new(1.0, 0, 2.0).unwrap();
        let cfg = ScanConfig {
            eps_min: -3.0,
            eps_max: -2.0,
            grid_step: 0.1,
            ..ScanConfig::default()
        };
        match scan_roots(&spec, &cfg) {
            Err(Error::NoRoot { sign_trace, .. }) => assert_eq!(sign_trace.len(), 11),
            other => panic!("unexpected {other:?}"),
        }
    }
}
