//! Command-line front end: configuration, orchestration, and JSON/CSV/SVG
//! artifacts.

pub mod commands;
pub mod config;
pub mod svg;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

pub use config::{Config, CONFIG_HELP};

pub const TOOL: &str = "peaklab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("solver failed: {0}")]
    Solver(#[from] peaklab::solver::SolverError),
    #[error("{0}")]
    Analysis(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Solver(_) => 2,
            CliError::Analysis(_) | CliError::Io(_) => 1,
        }
    }
}

pub fn analysis<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Analysis(e.to_string())
}

pub fn config_error<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "peaklab",
    version,
    about = "Critical points, level sets and integral identities for -Δu = f(u) in the plane",
    after_long_help = CONFIG_HELP
)]
pub struct Cli {
    /// JSON configuration file (see --help for keys and defaults).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: output.dir from the config, else "peaklab-out").
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Grid nodes along the longer side of the domain (overrides grid.n).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Seed for sampled ledger centres.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Also write JUnit XML for check results.
    #[arg(long, global = true)]
    pub junit: bool,
    /// Print nothing on success.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    /// Worker threads (default: all cores); outputs do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    /// Field source: catalog:<name> or csv:<path>; without it the problem is solved.
    #[arg(long)]
    pub field: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the boundary value problem; writes the field CSV and convergence log.
    Solve,
    /// Locate and classify critical points.
    Classify(FieldArgs),
    /// Extract level sets; writes CSV and SVG.
    Levels {
        #[command(flatten)]
        field: FieldArgs,
        /// Levels to extract (default: analysis.levels, else evenly spaced).
        #[arg(long = "t", num_args = 1.., allow_negative_numbers = true)]
        t: Vec<f64>,
    },
    /// Integral identity ledgers on balls B_δ(p) ∩ D, with refinement tables.
    Pohozaev {
        #[command(flatten)]
        field: FieldArgs,
        /// Ball centre "x,y".
        #[arg(long, allow_hyphen_values = true)]
        p: Option<String>,
        /// Ball radius (repeatable).
        #[arg(long)]
        delta: Vec<f64>,
        /// Region: plus, minus or whole.
        #[arg(long)]
        side: Option<String>,
        /// Evaluation path (exact_radial or grid; default: automatic).
        #[arg(long)]
        path: Option<String>,
    },
    /// Check u f(u) - 2F(u) > 0 and f' > 0 on an interval.
    Hypothesis {
        /// Nonlinearity family (default: nonlinearity from the config).
        #[arg(long)]
        family: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        m: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        a: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        c: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        lambda: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        value: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        lo: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        hi: Option<f64>,
    },
    /// Scripted checks of the closed-form example u = r^4/4 - r^3 + r^2.
    #[command(name = "verify-example1")]
    VerifyExample1 {
        /// Disk radius, 1 or 2.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    /// Full pipeline: solve, classify, checks, ledgers.
    Audit(FieldArgs),
    /// List the registered fields, nonlinearities, solvers and ledger paths.
    Catalog,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Classify(_) => "classify",
            Command::Levels { .. } => "levels",
            Command::Pohozaev { .. } => "pohozaev",
            Command::Hypothesis { .. } => "hypothesis",
            Command::VerifyExample1 { .. } => "verify-example1",
            Command::Audit(_) => "audit",
            Command::Catalog => "catalog",
        }
    }
}

/// Files of one run, each JSON document wrapped with tool version, command,
/// config hash and seed.
pub struct Artifacts {
    pub dir: PathBuf,
    pub command: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path, command: &'static str, cfg: &Config, seed: u64) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            command,
            config_hash: cfg.hash(),
            seed,
            written: Vec::new(),
        })
    }

    pub fn envelope<T: Serialize>(&self, result: &T) -> serde_json::Value {
        json!({
            "tool": TOOL,
            "version": VERSION,
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "result": result,
        })
    }

    pub fn json<T: Serialize>(&mut self, name: &str, result: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(&self.envelope(result)).map_err(analysis)?;
        text.push('\n');
        self.bytes(name, text.as_bytes())
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, data)?;
        self.written.push(path);
        Ok(())
    }
}

/// Result of a command: pass/fail plus lines for standard output.
#[derive(Debug, Default)]
pub struct Outcome {
    pub pass: bool,
    pub lines: Vec<String>,
}

/// Effective configuration: file (if any) with command-line overrides.
pub fn effective_config(cli: &Cli) -> Result<Config, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(n) = cli.n {
        cfg.grid.n = n;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Run one command; the exit code is 0 on success and 1 when a check fails.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = effective_config(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
        .map_err(analysis)?;
    pool.install(|| commands::dispatch(cli, &cfg))
}
