//! The four subcommands. Each returns a [`Report`] plus the run outcome;
//! rendering happens in the caller.

use aim_core::exec::{self, Execution};
use aim_core::oracle::{agrees, fd_spectrum, GridConfig};
use aim_core::problems::{EnergyLevel, ProblemSpec};
use aim_core::roots::solve_spectrum;
use aim_core::tables::{self, RowStatus};

use crate::config::{parse_omega, parse_omega_range, RunConfig};
use crate::output::{Cell, Report};
use crate::{CliError, Outcome};

pub const LEVEL_COLUMNS: [&str; 9] = [
    "omega_L",
    "m",
    "n",
    "eps",
    "E",
    "source",
    "k_used",
    "stabilized",
    "status",
];

const TABLE_COLUMNS: [&str; 12] = [
    "table",
    "m",
    "n",
    "level",
    "omega_inv",
    "omega_L",
    "published",
    "reference",
    "E",
    "E_oracle",
    "diff",
    "status",
];

const VERIFY_COLUMNS: [&str; 9] = [
    "omega_L", "m", "n", "E", "E_oracle", "gap", "rel_gap", "source", "status",
];

fn require_omega(cfg: &RunConfig) -> Result<f64, CliError> {
    cfg.omega_l
        .ok_or_else(|| CliError::Input("give --omega or --omega-inv (or omega/omega_inv in the config)".into()))
}

fn level_row(level: &EnergyLevel, status: &str) -> Vec<Cell> {
    vec![
        Cell::Real(level.omega_l),
        Cell::Int(level.m.into()),
        Cell::Int(level.n as i64),
        Cell::Real(level.eps),
        Cell::Real(level.energy),
        Cell::Text(level.source.as_str().into()),
        Cell::opt_int(level.k_used),
        Cell::Bool(level.stabilized),
        Cell::Text(status.into()),
    ]
}

pub fn solve(cfg: &RunConfig) -> Result<(Report, Outcome), CliError> {
    let spec = ProblemSpec::new(cfg.z, cfg.m, require_omega(cfg)?)?;
    let levels = solve_spectrum(&spec, &cfg.levels, &cfg.scan)?;
    let mut report = Report::new(&LEVEL_COLUMNS);
    for level in &levels {
        report.push(level_row(level, if level.stabilized { "ok" } else { "unstabilized" }));
    }
    Ok((report, Outcome::Success))
}

/// omega values for `sweep`: the explicit list, then the range, else the
/// single configured omega.
pub fn sweep_omegas(list: &[String], range: Option<&str>, cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let mut omegas = list.iter().map(|w| parse_omega(w)).collect::<Result<Vec<_>, _>>()?;
    if let Some(r) = range {
        omegas.extend(parse_omega_range(r)?);
    }
    if omegas.is_empty() {
        omegas.push(require_omega(cfg)?);
    }
    Ok(omegas)
}

pub fn sweep(omegas: &[f64], cfg: &RunConfig) -> Result<(Report, Outcome), CliError> {
    let blocks = exec::map(Execution::default(), omegas, |&omega| {
        let result =
            ProblemSpec::new(cfg.z, cfg.m, omega).and_then(|spec| solve_spectrum(&spec, &cfg.levels, &cfg.scan));
        match result {
            Ok(levels) => (
                levels
                    .iter()
                    .map(|l| level_row(l, if l.stabilized { "ok" } else { "unstabilized" }))
                    .collect::<Vec<_>>(),
                false,
            ),
            Err(e) => (
                cfg.levels
                    .iter()
                    .map(|&n| {
                        vec![
                            Cell::Real(omega),
                            Cell::Int(cfg.m.into()),
                            Cell::Int(n as i64),
                            Cell::Empty,
                            Cell::Empty,
                            Cell::Empty,
                            Cell::Empty,
                            Cell::Empty,
                            Cell::Text(format!("error: {e}")),
                        ]
                    })
                    .collect(),
                true,
            ),
        }
    });
    let mut report = Report::new(&LEVEL_COLUMNS);
    let mut failed = false;
    for (rows, err) in blocks {
        failed |= err;
        for row in rows {
            report.push(row);
        }
    }
    Ok((
        report,
        if failed {
            Outcome::SolverFailure
        } else {
            Outcome::Success
        },
    ))
}

pub fn verify(cfg: &RunConfig) -> Result<(Report, Outcome), CliError> {
    let spec = ProblemSpec::new(cfg.z, cfg.m, require_omega(cfg)?)?;
    let levels = solve_spectrum(&spec, &cfg.levels, &cfg.scan)?;
    let highest = *cfg.levels.iter().max().expect("level list is never empty");
    let oracle = fd_spectrum(&spec, highest, &GridConfig::for_problem(&spec))?;

    let mut report = Report::new(&VERIFY_COLUMNS);
    let mut all_pass = true;
    for level in &levels {
        let reference = oracle[level.n - 1].energy;
        let gap = level.energy - reference;
        let pass = agrees(level.energy, reference);
        all_pass &= pass;
        report.push(vec![
            Cell::Real(level.omega_l),
            Cell::Int(level.m.into()),
            Cell::Int(level.n as i64),
            Cell::Real(level.energy),
            Cell::Real(reference),
            Cell::Real(gap),
            Cell::Real(gap.abs() / reference.abs()),
            Cell::Text(level.source.as_str().into()),
            Cell::Text(if pass { "pass" } else { "fail" }.into()),
        ]);
        report.notes.extend(table_notes(&spec, level.n, reference));
    }
    Ok((report, if all_pass { Outcome::Success } else { Outcome::Mismatch }))
}

/// Printed table values for this (m, omega_L, level), with the oracle's verdict
/// on rows whose printed columns disagree.
fn table_notes(spec: &ProblemSpec, level: usize, oracle: f64) -> Vec<String> {
    let Ok(all) = tables::all_tables() else {
        return Vec::new();
    };
    let mut notes = Vec::new();
    for table in &all {
        for entry in &table.entries {
            let Ok(omega) = entry.omega_l() else { continue };
            let same_omega = (omega - spec.omega_l()).abs() <= 1e-12 * omega.max(1e-300);
            if entry.m != spec.m() || entry.level() != level || !same_omega || spec.z() != 1.0 {
                continue;
            }
            let mut note = format!("table {} (n = {}) prints {}", table.id, entry.n, entry.published);
            if let Some(r) = entry.reference {
                note.push_str(&format!(" with reference value {r}"));
            }
            if entry.disputed {
                note.push_str(&format!(
                    "; disputed row, oracle {oracle:.9} supports the {}",
                    table.adjudicate(entry, oracle).describe()
                ));
            }
            notes.push(note);
        }
    }
    notes
}

pub fn table(id: u8, cfg: &RunConfig) -> Result<(Report, Outcome), CliError> {
    let table = tables::table(id)?;
    let rows = tables::reproduce(&table, &cfg.scan, Execution::default());

    let mut report = Report::new(&TABLE_COLUMNS);
    let (mut mismatched, mut failed, mut ok) = (0, 0, 0);
    for row in &rows {
        match &row.status {
            RowStatus::Mismatch | RowStatus::OracleGap => mismatched += 1,
            RowStatus::Failed { .. } => failed += 1,
            RowStatus::Ok => ok += 1,
            RowStatus::Disputed { supports } => report.notes.push(format!(
                "n = {} at omega_L = {}: printed columns disagree ({} vs reference {}); oracle {:.9} supports the {}",
                row.entry.n,
                row.omega_l,
                row.entry.published,
                row.entry.reference.map_or("-".into(), |r| r.to_string()),
                row.oracle.map_or(f64::NAN, |o| o.energy),
                supports.describe()
            )),
        }
        report.push(vec![
            Cell::Int(table.id.into()),
            Cell::Int(row.entry.m.into()),
            Cell::Int(row.entry.n as i64),
            Cell::Int(row.entry.level() as i64),
            Cell::opt_real(row.entry.omega_inv),
            Cell::Real(row.omega_l),
            Cell::Real(row.entry.published),
            Cell::opt_real(row.entry.reference),
            Cell::opt_real(row.computed.map(|c| c.energy)),
            Cell::opt_real(row.oracle.map(|o| o.energy)),
            Cell::opt_real(row.difference()),
            Cell::Text(row.status.label()),
        ]);
    }
    report.notes.push(format!(
        "table {}: {} rows, {ok} ok, {mismatched} mismatched, {failed} failed",
        table.id,
        rows.len()
    ));
    let outcome = if mismatched > 0 {
        Outcome::Mismatch
    } else if failed > 0 {
        Outcome::SolverFailure
    } else {
        Outcome::Success
    };
    Ok((report, outcome))
}
