//! Command-line front end: CSV ingestion, the four workflows and the
//! CSV/JSON/SVG writers.
//!
//! Exit codes: 0 success, 1 internal, 2 usage, 3 parse, 4 validation,
//! 5 finished with solver warnings (outputs written), 6 I/O.

mod commands;
mod ingest;
mod svg;
mod table;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

pub use commands::{cmd_analyze, cmd_paths, cmd_simulate, cmd_step, Outcome};
pub use ingest::{ingest_csv, ingest_reader, IngestOptions};
pub use svg::render_svg;
pub use table::{num, pair_label, Table};

use crate::error::CodaError;
use crate::simlab::{ImportanceRule, ScenarioId};
use crate::spca::SpcaConfig;
use crate::stability::PathOptions;

pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_PARSE: u8 = 3;
pub const EXIT_VALIDATION: u8 = 4;
pub const EXIT_NONCONVERGENCE: u8 = 5;
pub const EXIT_IO: u8 = 6;

/// Environment variable read for the log filter.
pub const LOG_ENV: &str = "CODASPLR_LOG";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported figure kind `{0}` (expected tradeoff, stability or parts)")]
    UnsupportedKind(String),

    #[error("table does not fit the figure: {0}")]
    MalformedTable(String),

    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn from_csv(e: csv::Error) -> Self {
        let line = e.position().map_or(0, |p| p.line() as usize);
        match e.into_kind() {
            csv::ErrorKind::Io(source) => Self::Io {
                path: PathBuf::from("<csv>"),
                source,
            },
            kind => Self::Parse {
                line,
                col: 0,
                message: format!("{kind:?}"),
            },
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Parse { .. } => EXIT_PARSE,
            Self::Validation(_) => EXIT_VALIDATION,
            Self::Io { .. } => EXIT_IO,
            Self::UnsupportedKind(_) | Self::MalformedTable(_) | Self::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<CodaError> for CliError {
    fn from(e: CodaError) -> Self {
        Self::Validation(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "coda-splr", version, about = "Important pairwise logratios via sparse PCA")]
pub struct Cli {
    /// Worker threads for parallel fits (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stability paths, trade-off curve and part importance for a CSV.
    Paths(InputArgs),
    /// Stepwise ratio selection baseline for a CSV.
    Step(StepArgs),
    /// Monte-Carlo study on a synthetic scenario.
    Simulate(SimulateArgs),
    /// `paths` and `step` together, with STEP ranks beside the stability map.
    Analyze(InputArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    /// Number of sparse components.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Ridge weight of the elastic net.
    #[arg(long, default_value_t = 1e-4)]
    pub beta: f64,
    /// Number of sparsity values on the grid.
    #[arg(long, default_value_t = crate::spca::GRID_POINTS)]
    pub grid: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    /// Relative objective change that stops the solver.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    /// Fit every grid point from scratch instead of warm-starting.
    #[arg(long)]
    pub cold: bool,
}

impl SolverArgs {
    pub fn path_options(&self) -> PathOptions {
        PathOptions {
            spca: SpcaConfig {
                k: self.k,
                alpha: 0.0,
                beta: self.beta,
                max_iter: self.max_iter,
                tol: self.tol,
                seed: self.seed,
            },
            grid_points: self.grid,
            warm_start: !self.cold,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// CSV with a header of part names and one composition per row.
    #[arg(long)]
    pub input: PathBuf,
    /// The first CSV column holds row identifiers.
    #[arg(long)]
    pub id_column: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write SVG figures.
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct StepArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub id_column: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = ScenarioId::A)]
    pub scenario: ScenarioId,
    /// Number of parts, 10 or 20.
    #[arg(long, default_value_t = 10)]
    pub dim: usize,
    #[arg(long, default_value_t = ImportanceRule::Strict)]
    pub rule: ImportanceRule,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    /// Observations per simulated data set.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

/// Runs one command, on a pool of `--jobs` threads when given.
pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let Cli { jobs, command } = cli;
    let dispatch = move || match &command {
        Command::Paths(a) => cmd_paths(a),
        Command::Step(a) => cmd_step(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Analyze(a) => cmd_analyze(a),
    };
    match jobs {
        None => dispatch(),
        Some(0) => Err(CliError::Validation("--jobs must be at least 1".into())),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?
            .install(dispatch),
    }
}
