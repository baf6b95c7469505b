use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;

use config::{CommonArgs, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "streamnet", version, about = "Growth rate and biomass on stream networks")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Growth,
    Biomass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureArg {
    Fig5,
    Fig8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Growth rate, its bounds and the Perron pair for an allocation.
    Growth,
    /// Equilibrium biomass, bound, sign pattern and net flows.
    Biomass,
    /// Equilibrium CSV, optionally with a trajectory.
    Equilibrium {
        /// Also integrate from u0 up to this time.
        #[arg(long)]
        t_end: Option<f64>,
        /// Number of sample intervals for the trajectory.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Initial state; defaults to 0.01 K at every node.
        #[arg(long, value_delimiter = ',')]
        u0: Option<Vec<f64>>,
    },
    /// Maximize growth rate or biomass over the resource simplex.
    Optimize {
        #[arg(long, value_enum)]
        objective: ObjectiveArg,
        /// Skip the local refinement after the grid search.
        #[arg(long)]
        no_refine: bool,
        /// Also report first-order gains of perturbing the uniform allocation.
        #[arg(long)]
        uniform_perturb: bool,
    },
    /// Sign pattern of one allocation, or a survey over the simplex.
    Signs,
    /// All homogeneous flow stream networks on n nodes.
    Enumerate {
        #[arg(long)]
        n: usize,
    },
    /// Figure datasets as CSV.
    Figure {
        #[arg(value_enum)]
        which: FigureArg,
        /// Time horizon for fig5.
        #[arg(long, default_value_t = 500.0)]
        t_end: f64,
        /// Sample intervals for fig5.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

/// Error with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub const CONFIG: u8 = 2;
    pub const NUMERICAL: u8 = 3;

    pub fn config(msg: impl Into<String>) -> Self {
        Self {
            code: Self::CONFIG,
            msg: msg.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl From<streamnet::Error> for CliError {
    fn from(e: streamnet::Error) -> Self {
        let code = if e.is_numerical() {
            Self::NUMERICAL
        } else {
            Self::CONFIG
        };
        Self {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::config(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(&cli.common)?;
    match cli.command {
        Command::Growth => commands::growth(&cfg),
        Command::Biomass => commands::biomass(&cfg),
        Command::Equilibrium { t_end, samples, u0 } => {
            commands::equilibrium(&cfg, t_end, samples, u0)
        }
        Command::Optimize {
            objective,
            no_refine,
            uniform_perturb,
        } => commands::optimize(&cfg, objective, !no_refine, uniform_perturb),
        Command::Signs => commands::signs(&cfg),
        Command::Enumerate { n } => commands::enumerate(&cfg, n),
        Command::Figure {
            which,
            t_end,
            samples,
        } => commands::figure(&cfg, which, t_end, samples),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(CliError::CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
