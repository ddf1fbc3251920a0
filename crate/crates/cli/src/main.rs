#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the checks

mod estimate;
mod experiment;
mod oracle;
mod output;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use output::{Format, Sink};

/// Point-process Monte Carlo estimators for tail probabilities and means.
#[derive(Debug, Parser)]
#[command(name = "ppmc", version)]
struct Cli {
    /// Master seed; replica streams are derived from it.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Worker threads for the replica pool (all cores when unset).
    #[arg(long, global = true, env = "PPMC_THREADS")]
    threads: Option<usize>,

    /// Output file (stdout when unset).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run replicas of one estimator on one distribution.
    Estimate(estimate::EstimateArgs),
    /// Reproduce the spike and heavy-tail experiments.
    Experiment(experiment::ExperimentArgs),
    /// Closed-form quantities for a Pareto law.
    Oracle(oracle::OracleArgs),
    /// Optimize the randomization scheme.
    Optimize(oracle::OptimizeArgs),
    /// Quick consistency checks against closed forms.
    Selftest,
}

/// Settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Global {
    pub seed: u64,
    pub threads: Option<usize>,
    pub sink: Sink,
}

#[derive(Debug)]
pub enum Failure {
    /// Invalid arguments; exit code 2.
    Usage(String),
    /// The run stopped early or hit a runtime signal; exit code 3.
    Runtime(String),
}

impl From<ppmc_core::Error> for Failure {
    fn from(e: ppmc_core::Error) -> Self {
        use ppmc_core::Error as E;
        match e {
            E::InfiniteMean(_) | E::InvalidParameter { .. } | E::InvalidN(_) | E::InvalidScheme(_) | E::Parse(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

/// What a command reports back besides the document it wrote.
pub type Outcome = Result<Option<String>, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(2);
    }
    let global = Global {
        seed: cli.seed,
        threads: cli.threads,
        sink: Sink {
            out: cli.out,
            format: cli.format,
        },
    };
    let outcome = match cli.command {
        Command::Estimate(args) => estimate::run(&args, &global),
        Command::Experiment(args) => experiment::run(&args, &global),
        Command::Oracle(args) => oracle::run_oracle(&args, &global),
        Command::Optimize(args) => oracle::run_optimize(&args, &global),
        Command::Selftest => selftest::run(&global),
    };
    match outcome {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(signal)) => {
            eprintln!("warning: {signal}");
            ExitCode::from(3)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
