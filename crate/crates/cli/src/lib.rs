//! `mono`: command-line driver for the monopole boundary library.
//!
//! Every subcommand prints a JSON [`report::Report`] on stdout and may write
//! CSV files. Exit codes: 0 success, 1 verification failure, 2 invalid input
//! or usage, 3 non-convergence or numerical failure.

pub mod commands;
pub mod config;
pub mod report;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use config::{RunConfig, CONFIG_ENV};
use report::Report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) | CliError::Io(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mono", version, about = "Boundary n-point functions of hyperbolic monopoles")]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags mirroring the configuration keys; they override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// `key = value` configuration file (default: $MONO_CONFIG).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// abelian | hedgehog | from-nahm
    #[arg(long, global = true)]
    pub field: Option<String>,
    #[arg(long, global = true)]
    pub mass: Option<f64>,
    #[arg(long, global = true)]
    pub charge: Option<u32>,
    /// Truncation half-length of the geodesics.
    #[arg(long = "T", global = true)]
    pub t: Option<f64>,
    #[arg(long, global = true)]
    pub ode_rtol: Option<f64>,
    #[arg(long, global = true)]
    pub ode_atol: Option<f64>,
    #[arg(long, global = true)]
    pub fd_step: Option<f64>,
    /// Points per axis of the z grid.
    #[arg(long = "grid", global = true)]
    pub grid_n: Option<usize>,
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepSource {
    Identity,
    Veronese,
    Random,
    Monad,
    Scan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    All,
    Scatter,
    Npoint,
    Boundary,
    Nahm,
    Rep,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// n-point functions of comma-separated boundary points ("a+bi" or "inf").
    Npoint {
        /// One tuple per occurrence, e.g. `--points 0,1,inf`.
        #[arg(long, required = true, allow_hyphen_values = true)]
        points: Vec<String>,
        /// CSV output (z1..zn, re, im, err).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectral-curve scan, polynomial fit and charge estimate.
    Scan {
        /// Points per axis of the w grid.
        #[arg(long, default_value_t = 6)]
        w_grid: usize,
        /// Half-width of the square w and z grids.
        #[arg(long, default_value_t = 2.0)]
        radius: f64,
        /// Bidegree of the fitted polynomial (default: the field's charge).
        #[arg(long)]
        k: Option<usize>,
        /// CSV output (re_w, im_w, re_z, im_z, value).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Boundary connection and curvature over a z grid for fixed w.
    Boundary {
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        #[arg(long, default_value_t = 2.0)]
        radius: f64,
        /// CSV output (re_z, im_z, re_lambda, im_lambda, F).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the discrete Nahm equations for charge k and half-integer mass.
    Nahm {
        /// Charge (default: the configured charge).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Holomorphic sphere diagnostics: degree, area, 4-point tensor, subalgebra.
    Rep {
        #[arg(long, value_enum, default_value_t = RepSource::Veronese)]
        source: RepSource,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 6)]
        w_grid: usize,
        #[arg(long, default_value_t = 2.0)]
        radius: f64,
    },
    /// Run a verification suite.
    Verify {
        #[arg(value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Nahm charge to solve at the configured mass (default: k = 1, 2 at m = 3/2).
        #[arg(long)]
        k: Option<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Npoint { .. } => "npoint",
            Command::Scan { .. } => "scan",
            Command::Boundary { .. } => "boundary",
            Command::Nahm { .. } => "nahm",
            Command::Rep { .. } => "rep",
            Command::Verify { .. } => "verify",
        }
    }
}

/// Resolves the configuration: defaults, then the config file (flag or
/// environment), then flags.
pub fn resolve_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    let path = common.config.clone().or_else(|| std::env::var_os(CONFIG_ENV).filter(|p| !p.is_empty()).map(PathBuf::from));
    if let Some(p) = path {
        cfg.merge_file(&p)?;
    }
    if let Some(f) = &common.field {
        cfg.field = f.parse()?;
    }
    macro_rules! over {
        ($($flag:ident => $key:ident),*) => {
            $(if let Some(v) = common.$flag { cfg.$key = v; })*
        };
    }
    over!(mass => mass, charge => charge, ode_rtol => ode_rtol, ode_atol => ode_atol, fd_step => fd_step,
          grid_n => grid_n, threshold => threshold, seed => seed, workers => workers);
    if common.t.is_some() {
        cfg.t = common.t;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Result of a command: the report and the exit code it implies.
pub struct Outcome {
    pub report: Report,
    pub code: i32,
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = resolve_config(&cli.common)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if cfg.workers > 0 {
        builder = builder.num_threads(cfg.workers);
    }
    let pool = builder.build().map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    pool.install(|| commands::dispatch(&cli.command, &cfg))
}

/// Parses `args` (including the program name), runs the command, prints
/// the report, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            if let Err(e) = out.report.write_json(&mut lock).and_then(|_| writeln!(lock)) {
                eprintln!("mono: {e}");
                return EXIT_INPUT;
            }
            out.code
        }
        Err(e) => {
            eprintln!("mono: {e}");
            e.exit_code()
        }
    }
}
