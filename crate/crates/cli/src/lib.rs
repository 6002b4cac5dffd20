//! Library side of the `aim-spectra` binary, callable from tests.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};

use aim_core::exec;
use clap::error::ErrorKind;
use clap::Parser;

use crate::config::{Cli, Command, RunConfig};
use crate::output::Report;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or parameters (exit 3).
    Input(String),
    /// The solver could not produce a result (exit 1).
    Solver(aim_core::Error),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "invalid input: {msg}"),
            CliError::Solver(e) => write!(f, "{e}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<aim_core::Error> for CliError {
    fn from(e: aim_core::Error) -> Self {
        match e {
            aim_core::Error::InvalidInput(msg) => CliError::Input(msg),
            other => CliError::Solver(other),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 3,
            CliError::Solver(_) | CliError::Io(_) => 1,
        }
    }

    /// Message plus, for failed scans, a run-length summary of the sign trace.
    pub fn diagnostic(&self) -> String {
        let mut text = format!("error: {self}");
        if let CliError::Solver(aim_core::Error::NoRoot { sign_trace, .. }) = self {
            if !sign_trace.is_empty() {
                text.push_str(&format!(
                    "\nsign trace of delta over the eps grid: {}",
                    run_lengths(sign_trace)
                ));
            }
        }
        text
    }
}

fn run_lengths(trace: &str) -> String {
    let mut parts = Vec::new();
    let mut chars = trace.chars().peekable();
    while let Some(c) = chars.next() {
        let mut count = 1;
        while chars.peek() == Some(&c) {
            chars.next();
            count += 1;
        }
        parts.push(if count > 1 {
            format!("{c}x{count}")
        } else {
            c.to_string()
        });
    }
    parts.join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    SolverFailure,
    /// A table cell or verification gap outside tolerance.
    Mismatch,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::SolverFailure => 1,
            Outcome::Mismatch => 2,
        }
    }
}

/// Compute the report for one command.
pub fn execute(command: &Command, cfg: &RunConfig) -> Result<(Report, Outcome), CliError> {
    exec::with_jobs(cfg.jobs, || match command {
        Command::Solve => commands::solve(cfg),
        Command::Table { id } => commands::table(*id, cfg),
        Command::Sweep { omegas, omega_range } => {
            let list = commands::sweep_omegas(omegas, omega_range.as_deref(), cfg)?;
            commands::sweep(&list, cfg)
        }
        Command::Verify => commands::verify(cfg),
    })
}

/// Parse, run and render; output goes to `--out` or `stdout`. Returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return code;
        }
    };
    match run_parsed(&cli, stdout) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            e.exit_code()
        }
    }
}

fn run_parsed(cli: &Cli, stdout: &mut dyn Write) -> Result<Outcome, CliError> {
    let cfg = cli.flags.resolve()?;
    let (report, outcome) = execute(&cli.command, &cfg)?;
    match &cfg.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let mut writer = BufWriter::new(file);
            report.render(cfg.format, &mut writer)?;
            writer.flush()?;
        }
        None => report.render(cfg.format, stdout)?,
    }
    Ok(outcome)
}
