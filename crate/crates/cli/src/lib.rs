//! Config-driven experiment runner.
//!
//! Exit codes: 0 on success, 1 on schema or runtime errors, 2 when the
//! finding contradicts `--expect`.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use pdeclass_core::Precision;

pub use commands::{CliError, Finding, Report};
pub use config::{BackendKind, ConfigError, Expectation, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "pdeclass", version, about = "Run tropical, derivation and relation experiments from a config file")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (INI).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Decimal precision in significant digits.
    #[arg(long, global = true)]
    pub precision: Option<u32>,
    #[arg(long, global = true, value_parser = parse_backend)]
    pub backend: Option<BackendKind>,
    #[arg(long, global = true, value_parser = parse_expect)]
    pub expect: Option<Expectation>,
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    s.parse()
}

fn parse_expect(s: &str) -> Result<Expectation, String> {
    s.parse()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Derive the PDE, error constant and class tuple of each recurrence rule.
    Derive,
    /// Decide tropical equivalence of two maps.
    Equiv,
    /// Tropical constants (M_f, c_f) of each map.
    Constants,
    /// Evolve the flows and dump the grids.
    Evolve,
    /// Tabulate Q statistics and check the bound on every cell.
    Relate,
    /// Write certificates for the bound on the configured cells.
    Certify,
    /// Build the configured unrelatedness witness.
    Witness,
}

/// Loads the config and applies command-line overrides.
pub fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Schema("--config PATH is required".to_string()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(d) = cli.precision {
        if d == 0 {
            return Err(CliError::Schema("--precision must be positive".to_string()));
        }
        cfg.numerics.precision = Precision::digits(d);
        if let Some(r) = cfg.relation.as_mut() {
            r.extras.precision = cfg.numerics.precision;
        }
    }
    if let Some(b) = cli.backend {
        cfg.numerics.backend = Some(b);
    }
    if let Some(e) = cli.expect {
        cfg.expect = e;
    }
    Ok(cfg)
}

pub fn execute(command: Command, cfg: &ExperimentConfig, out: &Path) -> Result<Report, CliError> {
    std::fs::create_dir_all(out).map_err(|source| CliError::Io {
        path: out.display().to_string(),
        source,
    })?;
    match command {
        Command::Derive => commands::derive(cfg, out),
        Command::Equiv => commands::equiv(cfg, out),
        Command::Constants => commands::constants(cfg, out),
        Command::Evolve => commands::evolve(cfg, out),
        Command::Relate => commands::relate(cfg, out),
        Command::Certify => commands::certify(cfg, out),
        Command::Witness => commands::witness(cfg, out),
    }
}

/// Whether the finding agrees with the expectation. Subcommands without a
/// finding (derive, equiv, constants, evolve) always agree.
pub fn matches(expect: Expectation, finding: Option<Finding>) -> bool {
    matches!(
        (expect, finding),
        (Expectation::None, _)
            | (_, None)
            | (Expectation::Related, Some(Finding::Related))
            | (Expectation::Unrelated, Some(Finding::Unrelated))
    )
}

/// Parses arguments, runs, reports and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            if code == 0 {
                let _ = write!(stdout, "{e}");
            } else {
                let _ = write!(stderr, "{e}");
            }
            return code;
        }
    };
    let result = load(&cli).and_then(|cfg| Ok((execute(cli.command, &cfg, &cli.out)?, cfg.expect)));
    match result {
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
        Ok((report, expect)) => {
            for line in &report.summary {
                let _ = writeln!(stdout, "{line}");
            }
            for p in &report.written {
                let _ = writeln!(stdout, "wrote {}", p.display());
            }
            if matches(expect, report.finding) {
                0
            } else {
                let found = report.finding.map(|f| f.to_string()).unwrap_or_else(|| "no finding".to_string());
                let _ = writeln!(stderr, "expectation mismatch: expected {expect:?}, found {found}");
                2
            }
        }
    }
}
