mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Viscous Cahn-Hilliard tumor-growth simulations, operator checks and studies.
#[derive(Parser, Debug)]
#[command(name = "tumorch", version)]
pub struct Cli {
    /// Configuration file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for study-level parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for random initial profiles and operator checks; overrides `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    BackwardEuler,
    Rk4,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate one configuration and write snapshots and the energy ledger.
    Run {
        #[arg(long, value_enum, default_value = "backward-euler")]
        scheme: SchemeArg,
    },
    /// Randomized check of the resolvent identities on a grid.
    VerifyOps {
        /// Grid nodes per axis, e.g. `8,8`; overrides `verify.dims`.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Sampled check of the standing conditions on the configured potential.
    CheckPotential,
    StudyBeta,
    StudyCauchy,
    StudyLambda,
    StudyEpsilon,
    StudyDomain,
    StudyContraction,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Run { .. } => "run",
            Command::VerifyOps { .. } => "verify-ops",
            Command::CheckPotential => "check-potential",
            Command::StudyBeta => "study-beta",
            Command::StudyCauchy => "study-cauchy",
            Command::StudyLambda => "study-lambda",
            Command::StudyEpsilon => "study-epsilon",
            Command::StudyDomain => "study-domain",
            Command::StudyContraction => "study-contraction",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("tumorch {}: {}: {:#}", cli.command.name(), f.kind(), f.error);
            ExitCode::from(f.code)
        }
    }
}
