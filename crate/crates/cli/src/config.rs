//! Command-line flags, the key=value config file, and their merge into a
//! [`RunConfig`]. Precedence: flag, then config file, then default.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use aim_core::problems::omega_from_inverse;
use aim_core::roots::ScanConfig;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "aim-spectra",
    version,
    about = "Energy levels of the 2D hydrogen atom in a magnetic field"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Solve one spectrum.
    Solve,
    /// Recompute a published table (1-5).
    Table { id: u8 },
    /// Solve over a list or range of omega_L values.
    Sweep {
        /// Comma-separated omega_L values; `1/x` means omega_L = 1/x.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        omegas: Vec<String>,
        /// `start:stop:step`, inclusive of stop.
        #[arg(long)]
        omega_range: Option<String>,
    },
    /// Compare AIM (or the closed form) with the finite-difference oracle.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    #[arg(long = "Z", global = true, allow_negative_numbers = true)]
    pub z: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub m: Option<i32>,
    /// omega_L, as a number or `1/x`.
    #[arg(long, global = true, conflicts_with = "omega_inv", allow_negative_numbers = true)]
    pub omega: Option<String>,
    /// 1/omega_L, as printed in the reciprocal table columns.
    #[arg(long = "omega-inv", global = true, allow_negative_numbers = true)]
    pub omega_inv: Option<f64>,
    /// Levels: `a..b` (inclusive) or a single n.
    #[arg(long, global = true)]
    pub n: Option<String>,
    #[arg(long = "eps-min", global = true, allow_negative_numbers = true)]
    pub eps_min: Option<f64>,
    #[arg(long = "eps-max", global = true, allow_negative_numbers = true)]
    pub eps_max: Option<f64>,
    #[arg(long = "k-max", global = true)]
    pub k_max: Option<usize>,
    #[arg(long = "grid-step", global = true)]
    pub grid_step: Option<f64>,
    #[arg(long = "stab-tol", global = true)]
    pub stab_tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// key=value file with defaults for any of the flags above.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub z: f64,
    pub m: i32,
    pub omega_l: Option<f64>,
    pub levels: Vec<usize>,
    pub scan: ScanConfig,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub jobs: usize,
}

const KEYS: [&str; 14] = [
    "Z",
    "m",
    "omega",
    "omega_inv",
    "n",
    "eps_min",
    "eps_max",
    "k_max",
    "grid_step",
    "stab_tol",
    "format",
    "out",
    "jobs",
    "config",
];

/// Parse a flat `key = value` file. `#` starts a comment; dashes in keys are
/// read as underscores.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("config line {}: expected key = value", i + 1)))?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) || key == "config" {
            return Err(CliError::Input(format!("config line {}: unknown key `{key}`", i + 1)));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Input(format!("config line {}: `{key}` given twice", i + 1)));
        }
    }
    Ok(map)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Input(format!("`{key}`: cannot parse `{value}`")))
}

/// `x` or `a/b`. `1/x` goes through the same conversion as `--omega-inv x`.
pub fn parse_omega(text: &str) -> Result<f64, CliError> {
    let text = text.trim();
    let omega = match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = parse_value("omega", num.trim())?;
            let den: f64 = parse_value("omega", den.trim())?;
            if num == 1.0 {
                omega_from_inverse(den)?
            } else {
                num * omega_from_inverse(den)?
            }
        }
        None => parse_value("omega", text)?,
    };
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(CliError::Input(format!(
            "omega_L = {omega} must be finite and non-negative"
        )));
    }
    Ok(omega)
}

/// `a..b` (inclusive), `a..=b`, or a single level.
pub fn parse_levels(text: &str) -> Result<Vec<usize>, CliError> {
    let text = text.trim();
    let (lo, hi) = match text.split_once("..") {
        Some((a, b)) => (
            parse_value::<usize>("n", a.trim())?,
            parse_value::<usize>("n", b.trim().trim_start_matches('='))?,
        ),
        None => {
            let n = parse_value::<usize>("n", text)?;
            (n, n)
        }
    };
    if lo == 0 || hi < lo {
        return Err(CliError::Input(format!(
            "level range `{text}` must satisfy 1 <= a <= b"
        )));
    }
    Ok((lo..=hi).collect())
}

/// `start:stop:step`, stop included when it lands on the grid.
pub fn parse_omega_range(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(CliError::Input(format!("omega range `{text}` must be start:stop:step")));
    };
    let start: f64 = parse_value("omega_range", start)?;
    let stop: f64 = parse_value("omega_range", stop)?;
    let step: f64 = parse_value("omega_range", step)?;
    if !(start >= 0.0 && stop >= start && step > 0.0) {
        return Err(CliError::Input(format!(
            "omega range `{text}` needs 0 <= start <= stop and step > 0"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}

impl Flags {
    /// Merge with the config file (if any) and defaults.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => load_config(path)?,
            None => BTreeMap::new(),
        };
        let from_file = |key: &str| file.get(key).map(String::as_str);

        let z = match (self.z, from_file("Z")) {
            (Some(z), _) => z,
            (None, Some(v)) => parse_value("Z", v)?,
            (None, None) => 1.0,
        };
        let m = match (self.m, from_file("m")) {
            (Some(m), _) => m,
            (None, Some(v)) => parse_value("m", v)?,
            (None, None) => 0,
        };
        let omega_l = match (&self.omega, self.omega_inv) {
            (Some(w), _) => Some(parse_omega(w)?),
            (None, Some(inv)) => Some(omega_from_inverse(inv)?),
            (None, None) => match (from_file("omega"), from_file("omega_inv")) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Input("config gives both omega and omega_inv".into()));
                }
                (Some(w), None) => Some(parse_omega(w)?),
                (None, Some(inv)) => Some(omega_from_inverse(parse_value("omega_inv", inv)?)?),
                (None, None) => None,
            },
        };
        let levels = parse_levels(self.n.as_deref().or(from_file("n")).unwrap_or("1..3"))?;

        let defaults = ScanConfig::default();
        let pick_f64 = |flag: Option<f64>, key: &str, default: f64| -> Result<f64, CliError> {
            match (flag, from_file(key)) {
                (Some(v), _) => Ok(v),
                (None, Some(v)) => parse_value(key, v),
                (None, None) => Ok(default),
            }
        };
        let k_max = match (self.k_max, from_file("k_max")) {
            (Some(k), _) => k,
            (None, Some(v)) => parse_value("k_max", v)?,
            (None, None) => defaults.k_max,
        };
        let scan = ScanConfig {
            eps_min: pick_f64(self.eps_min, "eps_min", defaults.eps_min)?,
            eps_max: pick_f64(self.eps_max, "eps_max", defaults.eps_max)?,
            grid_step: pick_f64(self.grid_step, "grid_step", defaults.grid_step)?,
            stab_tol: pick_f64(self.stab_tol, "stab_tol", defaults.stab_tol)?,
            k_max,
            k_min: defaults.k_min.min(k_max.saturating_sub(2)),
            ..defaults
        };
        scan.validate()?;

        let format = match (self.format, from_file("format")) {
            (Some(f), _) => f,
            (None, Some(v)) => Format::from_str(v, true)
                .map_err(|_| CliError::Input(format!("`format`: expected text, csv or jsonl, got `{v}`")))?,
            (None, None) => Format::Text,
        };
        let out = self.out.clone().or_else(|| from_file("out").map(PathBuf::from));
        let jobs = match (self.jobs, from_file("jobs")) {
            (Some(j), _) => j,
            (None, Some(v)) => parse_value("jobs", v)?,
            (None, None) => 0,
        };
        if !(z.is_finite() && z > 0.0) {
            return Err(CliError::Input(format!("Z = {z} must be positive")));
        }
        Ok(RunConfig {
            z,
            m,
            omega_l,
            levels,
            scan,
            format,
            out,
            jobs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_ranges() {
        assert_eq!(parse_levels("1..3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_levels("2..=4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_levels("5").unwrap(), vec![5]);
        assert!(parse_levels("0..2").is_err());
        assert!(parse_levels("3..1").is_err());
        assert!(parse_levels("a").is_err());
    }

    #[test]
    fn omega_forms() {
        assert_eq!(parse_omega("0.5").unwrap(), 0.5);
        assert_eq!(parse_omega("1/36.6810").unwrap(), omega_from_inverse(36.681).unwrap());
        assert_eq!(parse_omega("2/3").unwrap(), 2.0 * (1.0 / 3.0));
        assert!(parse_omega("-1").is_err());
        assert!(parse_omega("1/0").is_err());
    }

    #[test]
    fn ranges() {
        let r = parse_omega_range("0:0.5:0.25").unwrap();
        assert_eq!(r, vec![0.0, 0.25, 0.5]);
        assert!(parse_omega_range("1:0:0.1").is_err());
        assert!(parse_omega_range("0:1").is_err());
    }

    #[test]
    fn config_text() {
        let map = parse_config_text("# comment\nZ = 2\nomega-inv = 3.0  # trailing\n\nk_max=40\n").unwrap();
        assert_eq!(map["Z"], "2");
        assert_eq!(map["omega_inv"], "3.0");
        assert_eq!(map["k_max"], "40");
        assert!(parse_config_text("bogus = 1").is_err());
        assert!(parse_config_text("Z 2").is_err());
        assert!(parse_config_text("Z = 1\nZ = 2").is_err());
    }

    #[test]
    fn defaults() {
        let cfg = Flags::default().resolve().unwrap();
        assert_eq!(cfg.z, 1.0);
        assert_eq!(cfg.m, 0);
        assert_eq!(cfg.omega_l, None);
        assert_eq!(cfg.levels, vec![1, 2, 3]);
        assert_eq!(cfg.scan, ScanConfig::default());
        assert_eq!(cfg.format, Format::Text);
    }
}
