use std::time::{Duration, Instant};

use clap::{Args, ValueEnum};
use serde_json::json;

use ppmc_core::distributions::{heavytail_reference_mean, heavytail_target, spike_reference_mean, spike_target};
use ppmc_core::experiments::{self, BudgetConfig, ExperimentOptions, RunRow};
use ppmc_core::report::SCHEMA_VERSION;

use crate::output::{write_json, Format};
use crate::{Failure, Global, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    /// Fixed-iteration nested sampling against the randomized estimator.
    Table1,
    /// The increment stopping rule against the randomized estimator.
    Adaptive,
    /// Nested sampling against the fixed-budget average.
    Budget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Integrand {
    Spike,
    Heavytail,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    which: Which,

    /// Integrand (spike for table1 and adaptive, heavytail for budget by default).
    #[arg(long, value_enum)]
    name: Option<Integrand>,

    /// Comma-separated numbers of walks (table1 and adaptive).
    #[arg(long = "N", value_delimiter = ',')]
    n: Option<Vec<usize>>,

    /// Runs per estimator and grid point.
    #[arg(long)]
    replicas: Option<usize>,

    /// Iterations per walk for the fixed-iteration runs.
    #[arg(long, default_value_t = 100)]
    iterations_per_walk: u64,

    /// Threshold of the increment rule (adaptive).
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,

    /// Comma-separated budgets in conditional draws (budget).
    #[arg(long, value_delimiter = ',')]
    budget: Option<Vec<u64>>,

    /// Stop starting new runs after this many seconds.
    #[arg(long)]
    max_seconds: Option<f64>,
}

pub fn run(args: &ExperimentArgs, global: &Global) -> Outcome {
    let name = args.name.unwrap_or(match args.which {
        Which::Budget => Integrand::Heavytail,
        _ => Integrand::Spike,
    });
    let (target, reference) = match name {
        Integrand::Spike => (spike_target(), spike_reference_mean()),
        Integrand::Heavytail => (heavytail_target(), heavytail_reference_mean()),
    };
    let mut opts = ExperimentOptions::new(global.seed);
    opts.threads = global.threads;
    if let Some(s) = args.max_seconds {
        if !(s > 0.0) {
            return Err(Failure::Usage("--max-seconds must be positive".into()));
        }
        opts.deadline = Some(Instant::now() + Duration::from_secs_f64(s));
    }
    let mut rows: Vec<RunRow> = Vec::new();
    let mut summaries = Vec::new();
    let mut truncated = false;
    match args.which {
        Which::Table1 | Which::Adaptive => {
            let grid = args.n.clone().unwrap_or_else(|| match args.which {
                Which::Table1 => vec![100, 200, 300, 400, 500],
                _ => vec![500],
            });
            let replicas = args.replicas.unwrap_or(20);
            for &n in &grid {
                if args.which == Which::Table1 {
                    let out = experiments::table1(&target, reference, n, replicas, args.iterations_per_walk, &opts)?;
                    rows.extend(out.rows);
                    summaries.push(serde_json::to_value(&out.summary).expect("summary serializes"));
                    truncated |= out.truncated;
                } else {
                    let out = experiments::adaptive(&target, reference, n, args.eps, replicas, &opts)?;
                    rows.extend(out.rows);
                    summaries.push(serde_json::to_value(&out.summary).expect("summary serializes"));
                    truncated |= out.truncated;
                }
            }
        }
        Which::Budget => {
            let budgets = args.budget.clone().unwrap_or_else(|| vec![100_000, 1_000_000]);
            let replicas = args.replicas.unwrap_or(10);
            for &c in &budgets {
                let config = BudgetConfig::new(c, replicas);
                if config.ns_n < 2 {
                    return Err(Failure::Usage(format!("budget {c} is too small for nested sampling")));
                }
                let out = experiments::budget(&target, reference, config, &opts)?;
                rows.extend(out.rows);
                summaries.push(serde_json::to_value(&out.summary).expect("summary serializes"));
                truncated |= out.truncated;
            }
        }
    }
    let experiment = match args.which {
        Which::Table1 => "table1",
        Which::Adaptive => "adaptive",
        Which::Budget => "budget",
    };
    let summary = json!({
        "schema": SCHEMA_VERSION,
        "experiment": experiment,
        "integrand": target.name,
        "seed": global.seed,
        "truncated": truncated,
        "summaries": summaries,
    });
    match global.sink.format {
        Format::Json => {
            let mut doc = summary;
            doc["rows"] = serde_json::to_value(&rows).expect("rows serialize");
            global.sink.json(&doc)?;
        }
        Format::Csv => {
            global.sink.csv(&rows)?;
            match global.sink.sidecar(".summary.json") {
                Some(path) => write_json(Some(&path), &summary)?,
                None => eprintln!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes")),
            }
        }
    }
    Ok(truncated.then(|| "wall-clock limit reached; the output is partial".to_string()))
}
