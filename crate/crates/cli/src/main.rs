//! `circdiff`: simulate circular diffusions, validate the approximate von
//! Mises transition density against a Crank–Nicolson solution, and fit
//! circular or stochastic-correlation models to data.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! failure.

mod commands;
mod config;
mod error;
mod ingest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "circdiff",
    version,
    about = "Circular diffusions and stochastic correlation"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command. Flags override the config file.
#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML config file for the command; see README for the keys.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Master seed for simulation and bootstrap [config: seed, default 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for replications and bootstrap [default: available cores].
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Bootstrap samples; the bare flag means 500 [config: bootstrap, default 0].
    #[arg(long, global = true, value_name = "N", num_args = 0..=1, default_missing_value = "500")]
    pub bootstrap: Option<usize>,
    /// Angle units of input and output files [default: radians, or the
    /// units named by an angle_radians/angle_degrees header].
    #[arg(long, global = true, value_enum)]
    pub units: Option<Units>,
    /// Time step between observations, overriding timestamps or config.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a path (CSV), or run a replication study when the config
    /// sets `replications` (report CSV).
    Simulate {
        /// Output file [default: stdout].
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Hellinger distance between the analytic transition density and the
    /// Crank–Nicolson solution over a parameter grid (CSV).
    ValidateTpd {
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Fit circular Brownian motion or the von Mises process to an angle
    /// series (JSON).
    FitCircular {
        /// CSV with columns timestamp,angle.
        input: PathBuf,
        #[arg(long, value_enum)]
        process: Option<ProcessKind>,
        /// Interval level for bootstrap intervals [default 0.95].
        #[arg(long)]
        level: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Fit the stochastic-correlation model to a price pair (JSON), with
    /// optional bootstrap bands for the correlation path (CSV).
    FitStochcorr {
        /// CSV with columns date,price1,price2; or, with SECOND, a date,price file.
        input: PathBuf,
        /// Second date,price file, inner-joined with INPUT on dates.
        second: Option<PathBuf>,
        #[arg(long, value_enum)]
        process: Option<ProcessKind>,
        /// Roughness penalty weight [default 4 for cbm, 10 for vm].
        #[arg(long)]
        lambda1: Option<f64>,
        /// Concentration penalty weight, von Mises only [default 20].
        #[arg(long)]
        lambda2: Option<f64>,
        /// Band level [default 0.95].
        #[arg(long)]
        level: Option<f64>,
        /// Fit JSON [default: stdout].
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Band CSV with columns time,rho_hat,lower,upper.
        #[arg(long)]
        bands: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Radians,
    Degrees,
}

impl Units {
    pub fn to_radians(self, x: f64) -> f64 {
        match self {
            Units::Radians => x,
            Units::Degrees => x.to_radians(),
        }
    }

    pub fn from_radians(self, x: f64) -> f64 {
        match self {
            Units::Radians => x,
            Units::Degrees => x.to_degrees(),
        }
    }

    pub fn column(self) -> &'static str {
        match self {
            Units::Radians => "angle_radians",
            Units::Degrees => "angle_degrees",
        }
    }
}

impl std::fmt::Display for Units {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Units::Radians => "radians",
            Units::Degrees => "degrees",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum ProcessKind {
    #[value(name = "cbm", alias = "circular-brownian")]
    #[serde(rename = "circular-brownian", alias = "cbm")]
    CircularBrownian,
    #[value(name = "vm", alias = "von-mises")]
    #[serde(rename = "von-mises", alias = "vm")]
    VonMises,
}

impl ProcessKind {
    pub fn process(self) -> circdiff::estimation::Process {
        match self {
            ProcessKind::CircularBrownian => circdiff::estimation::Process::CircularBrownian,
            ProcessKind::VonMises => circdiff::estimation::Process::VonMises,
        }
    }

    pub fn corr_kind(self) -> circdiff::stochcorr::CorrKind {
        match self {
            ProcessKind::CircularBrownian => circdiff::stochcorr::CorrKind::CircularBrownian,
            ProcessKind::VonMises => circdiff::stochcorr::CorrKind::VonMises,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProcessKind::CircularBrownian => "circular-brownian",
            ProcessKind::VonMises => "von-mises",
        }
    }
}

fn run(cli: Cli) -> error::Result<()> {
    if let Some(n) = cli.global.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--workers: {e}")))?;
    }
    let g = &cli.global;
    match cli.command {
        Command::Simulate { output } => commands::simulate::run(g, output.as_deref()),
        Command::ValidateTpd { output } => commands::validate::run(g, output.as_deref()),
        Command::FitCircular {
            input,
            process,
            level,
            output,
        } => commands::fit_circular::run(g, &input, process, level, output.as_deref()),
        Command::FitStochcorr {
            input,
            second,
            process,
            lambda1,
            lambda2,
            level,
            output,
            bands,
        } => commands::fit_stochcorr::run(
            g,
            commands::fit_stochcorr::Inputs {
                first: &input,
                second: second.as_deref(),
            },
            commands::fit_stochcorr::Overrides {
                process,
                lambda1,
                lambda2,
                level,
            },
            output.as_deref(),
            bands.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
