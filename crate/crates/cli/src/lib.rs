//! Command-line front end: argument handling, configuration, experiment
//! commands and their output files.

pub mod checks;
pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use coupled_transport::Error;

use crate::config::{Command, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "ctransport", about = "Coupled 3D-1D solute transport experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Comma-separated mesh levels n (h = 1/n).
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    /// Polynomial degree of the vessel space.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Interior penalty variant: 1, 0 or -1.
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<i32>,
    /// Penalty parameter.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of points on each wall circle.
    #[arg(long)]
    pub circle_points: Option<usize>,
    /// Compare against the reference bands; exit with code 4 on a miss.
    #[arg(long)]
    pub check: bool,
    /// Run element loops without rayon.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Convergence study against the manufactured solution.
    Manufactured {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Self-convergence study on the diagonal vessel.
    Diagonal {
        /// Vessel configuration: 1, 2 or 3.
        #[arg(long)]
        case: Option<u32>,
        /// Level of the reference solution.
        #[arg(long)]
        fine: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the experiment described by a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the output directory of the file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn apply(common: CommonArgs, cfg: &mut RunConfig) {
    if let Some(v) = common.levels {
        cfg.levels = v;
    }
    if let Some(v) = common.degree {
        cfg.degree = v;
    }
    if let Some(v) = common.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = common.sigma {
        cfg.sigma = v;
    }
    if let Some(v) = common.out {
        cfg.out = v;
    }
    if let Some(v) = common.circle_points {
        cfg.circle_points = v;
    }
    cfg.check |= common.check;
    cfg.sequential |= common.sequential;
}

/// Turns parsed arguments into a validated configuration.
pub fn resolve(cli: Cli) -> Result<RunConfig, Error> {
    let cfg = match cli.command {
        CliCommand::Manufactured { common } => {
            let mut cfg = RunConfig {
                command: Command::Manufactured,
                snapshots: vec![1.0],
                ..RunConfig::default()
            };
            apply(common, &mut cfg);
            cfg
        }
        CliCommand::Diagonal { case, fine, common } => {
            let mut cfg = RunConfig {
                command: Command::Diagonal,
                ..RunConfig::default()
            };
            apply(common, &mut cfg);
            if let Some(c) = case {
                cfg.case = c;
            }
            if let Some(f) = fine {
                cfg.fine = f;
            }
            cfg
        }
        CliCommand::Run { config, out } => {
            let mut cfg = RunConfig::from_file(&config)?;
            if let Some(o) = out {
                cfg.out = o;
            }
            cfg
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Solver(_) | Error::Location { .. } | Error::Shape(_) => EXIT_SOLVER,
        _ => EXIT_CONFIG,
    }
}

/// Reads `SOLVER_THREADS` and sizes the global rayon pool accordingly.
pub fn configure_threads(value: Option<&str>) -> Result<(), Error> {
    let Some(v) = value else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::Config(format!("SOLVER_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size the thread pool: {e}")))
}

/// Runs a resolved configuration and returns the process exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    match commands::execute(cfg) {
        Ok(checks) => {
            for c in &checks {
                let status = if c.passed { "pass" } else { "FAIL" };
                println!("{status}: {} ({})", c.name, c.detail);
            }
            if checks.iter().all(|c| c.passed) {
                EXIT_OK
            } else {
                EXIT_CHECK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
