//! Published tables and their recomputation.
//!
//! The golden values live in `data/tables.toml` and are compiled in.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::oracle::{agrees, fd_single, GridConfig};
use crate::problems::{analytic_energy, eps_to_energy, omega_from_inverse, EnergyLevel, ProblemSpec, Source};
use crate::roots::{nearest_root, solve_spectrum_with, ScanConfig};

const DATA: &str = include_str!("../data/tables.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Labels {
    /// The row names its level; AIM takes the stabilized root nearest the
    /// oracle's value for that level.
    Indexed,
    /// n-th stabilized root of an ascending scan.
    Ascending,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TableEntry {
    pub m: i32,
    /// Label as printed.
    pub n: usize,
    /// Level counted from the ground state, when it differs from `n`.
    #[serde(default)]
    pub level: Option<usize>,
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default)]
    pub omega_inv: Option<f64>,
    /// Comparison column printed beside the AIM values, if any.
    #[serde(default)]
    pub reference: Option<f64>,
    pub published: f64,
    #[serde(default)]
    pub disputed: bool,
}

impl TableEntry {
    pub fn omega_l(&self) -> Result<f64> {
        match (self.omega, self.omega_inv) {
            (Some(w), None) => Ok(w),
            (None, Some(inv)) => omega_from_inverse(inv),
            _ => Err(Error::InvalidInput(
                "table entry needs exactly one of omega, omega_inv".into(),
            )),
        }
    }

    /// Level counted from the ground state.
    pub fn level(&self) -> usize {
        self.level.unwrap_or(self.n)
    }

    pub fn spec(&self) -> Result<ProblemSpec> {
        ProblemSpec::new(1.0, self.m, self.omega_l()?)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Table {
    pub id: u8,
    pub title: String,
    pub labels: Labels,
    pub abs_tol: f64,
    #[serde(default)]
    pub rel_tol: Option<f64>,
    #[serde(rename = "entry")]
    pub entries: Vec<TableEntry>,
}

impl Table {
    /// Which printed column `oracle` falls within tolerance of.
    pub fn adjudicate(&self, entry: &TableEntry, oracle: f64) -> Verdict {
        if self.matches(oracle, entry.published) {
            Verdict::Published
        } else if entry.reference.is_some_and(|r| self.matches(oracle, r)) {
            Verdict::Reference
        } else {
            Verdict::Neither
        }
    }

    pub fn matches(&self, computed: f64, published: f64) -> bool {
        let gap = (computed - published).abs();
        match self.rel_tol {
            Some(rel) if published.abs() > 1.0 => gap <= rel * published.abs(),
            _ => gap <= self.abs_tol,
        }
    }
}

#[derive(Debug, Deserialize)]
struct DataFile {
    version: u32,
    table: Vec<Table>,
}

pub fn all_tables() -> Result<Vec<Table>> {
    let data: DataFile = toml::from_str(DATA).map_err(|e| Error::InvalidInput(format!("table data: {e}")))?;
    if data.version != 1 {
        return Err(Error::InvalidInput(format!(
            "unsupported table data version {}",
            data.version
        )));
    }
    Ok(data.table)
}

pub fn table(id: u8) -> Result<Table> {
    all_tables()?
        .into_iter()
        .find(|t| t.id == id)
        .ok_or_else(|| Error::InvalidInput(format!("no table {id}; tables are 1 to 5")))
}

/// Which printed column the oracle sides with on a disputed row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// The column the table presents as its own result.
    Published,
    Reference,
    Neither,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    /// Recomputed value outside the published tolerance.
    Mismatch,
    /// Oracle and AIM disagree.
    OracleGap,
    /// Known conflicting row, settled by the oracle.
    Disputed {
        supports: Verdict,
    },
    Failed {
        reason: String,
    },
}

impl Verdict {
    pub fn describe(self) -> &'static str {
        match self {
            Verdict::Published => "published column",
            Verdict::Reference => "reference column",
            Verdict::Neither => "neither column",
        }
    }
}

impl RowStatus {
    pub fn label(&self) -> String {
        match self {
            RowStatus::Ok => "ok".into(),
            RowStatus::Mismatch => "mismatch".into(),
            RowStatus::OracleGap => "oracle-gap".into(),
            RowStatus::Disputed { supports } => format!("disputed: oracle supports {}", supports.describe()),
            RowStatus::Failed { reason } => format!("failed: {reason}"),
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(
            self,
            RowStatus::Mismatch | RowStatus::OracleGap | RowStatus::Failed { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub entry: TableEntry,
    pub omega_l: f64,
    pub computed: Option<EnergyLevel>,
    pub oracle: Option<EnergyLevel>,
    pub status: RowStatus,
}

impl TableRow {
    pub fn difference(&self) -> Option<f64> {
        self.computed.map(|c| c.energy - self.entry.published)
    }
}

fn compute_row(table: &Table, entry: &TableEntry, cfg: &ScanConfig) -> TableRow {
    let omega_l = entry.omega_l().unwrap_or(f64::NAN);
    let failed = |reason: String, oracle: Option<EnergyLevel>| TableRow {
        entry: entry.clone(),
        omega_l,
        computed: None,
        oracle,
        status: RowStatus::Failed { reason },
    };
    let spec = match entry.spec() {
        Ok(s) => s,
        Err(e) => return failed(e.to_string(), None),
    };
    let level = entry.level();
    let oracle = match fd_single(&spec, level, &GridConfig::for_problem(&spec)) {
        Ok(o) => o,
        Err(e) => return failed(format!("oracle: {e}"), None),
    };

    let computed = if spec.is_field_free() {
        analytic_energy(level, entry.m, spec.z())
    } else {
        let scan = cfg.adapted_to(&spec);
        match table.labels {
            Labels::Ascending => {
                solve_spectrum_with(&spec, &[level], &scan, Execution::Sequential).map(|levels| levels[0])
            }
            Labels::Indexed => {
                let half_width = (spec.omega_l() / (spec.z() * spec.z())).max(4.0 * scan.grid_step);
                nearest_root(&spec, oracle.eps, half_width, &scan).map(|root| EnergyLevel {
                    n: level,
                    m: entry.m,
                    omega_l: spec.omega_l(),
                    eps: root.eps,
                    energy: eps_to_energy(root.eps, &spec),
                    source: Source::Aim,
                    k_used: Some(scan.k_max),
                    stabilized: root.stabilized,
                })
            }
        }
    };
    let computed = match computed {
        Ok(c) => c,
        Err(e) => return failed(e.to_string(), Some(oracle)),
    };

    let status = if entry.disputed {
        RowStatus::Disputed {
            supports: table.adjudicate(entry, oracle.energy),
        }
    } else if !table.matches(computed.energy, entry.published) {
        RowStatus::Mismatch
    } else if !agrees(computed.energy, oracle.energy) {
        RowStatus::OracleGap
    } else {
        RowStatus::Ok
    };
    TableRow {
        entry: entry.clone(),
        omega_l,
        computed: Some(computed),
        oracle: Some(oracle),
        status,
    }
}

/// Recompute every row of `table`, output in table order.
pub fn reproduce(table: &Table, cfg: &ScanConfig, execution: Execution) -> Vec<TableRow> {
    exec::map(execution, &table.entries, |entry| compute_row(table, entry, cfg))
}
