use std::sync::Arc;

use clap::{Args, ValueEnum};
use serde::Serialize;

use ppmc_core::distributions::{Target, TargetDistribution};
use ppmc_core::estimators::{alpha_budget, randomized_z, run_ns_adaptive, StoppingRule};
use ppmc_core::mcmc::{KernelConfig, KernelKind, McmcSampler};
use ppmc_core::pareto_oracle::ParetoOracle;
use ppmc_core::randomize::{beta_app, optimal_scheme, q_sequence_numeric, QSequence, RandomizationScheme};
use ppmc_core::replicas::run_replicas;
use ppmc_core::report::{real, EstimateReport};
use ppmc_core::walk::{ExactSampler, LevelSampler};
use ppmc_core::Error;

use crate::output::Format;
use crate::{Failure, Global, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorKind {
    /// Randomly truncated estimator, one value per replica.
    #[value(name = "Z", alias = "z")]
    Z,
    /// Average of randomized replicas under a fixed budget.
    Alpha,
    /// Nested sampling with a fixed number of iterations.
    NsFixed,
    /// Nested sampling stopped when the latest increment is small.
    NsIncrement,
    /// Nested sampling stopped after `factor · N · H` iterations.
    NsInformation,
    /// The unbiased weights run for a fixed, deep number of iterations.
    IdealDeep,
}

impl EstimatorKind {
    fn label(self) -> &'static str {
        match self {
            EstimatorKind::Z => "Z",
            EstimatorKind::Alpha => "alpha",
            EstimatorKind::NsFixed => "ns-fixed",
            EstimatorKind::NsIncrement => "ns-increment",
            EstimatorKind::NsInformation => "ns-information",
            EstimatorKind::IdealDeep => "ideal-deep",
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// pareto:a=<real>, exp:rate=<real>, uniform, spike or heavytail.
    #[arg(long)]
    dist: String,

    #[arg(long, value_enum, default_value_t = EstimatorKind::Z)]
    estimator: EstimatorKind,

    /// Number of merged walks.
    #[arg(long = "N", default_value_t = 100)]
    n: usize,

    /// geom:app, geom:beta=<real>, optimal or explicit-file:<path>.
    #[arg(long, default_value = "geom:app")]
    scheme: String,

    #[arg(long, default_value_t = 1000)]
    replicas: usize,

    /// Budget in generator calls, required by the alpha estimator.
    #[arg(long)]
    budget: Option<u64>,

    /// Event count for ns-fixed and ideal-deep (default 100·N).
    #[arg(long)]
    iterations: Option<u64>,

    /// Threshold of the increment rule.
    #[arg(long, default_value_t = 1e-8)]
    eps: f64,

    /// Multiplier of the information rule.
    #[arg(long, default_value_t = 2.0)]
    factor: f64,

    /// Kernel steps per conditional draw (black-box targets).
    #[arg(long)]
    burnin: Option<u64>,

    #[arg(long)]
    sigma0: Option<f64>,

    /// Lower clamp of the adapted step size.
    #[arg(long)]
    sigma_min: Option<f64>,

    /// gaussian or cube; must match the input law of the target.
    #[arg(long)]
    kernel: Option<String>,
}

/// One row of the CSV form of an estimate.
#[derive(Debug, Serialize)]
struct ReplicaRow<'a> {
    estimator: &'a str,
    distribution: &'a str,
    #[serde(rename = "N")]
    n: usize,
    replica: usize,
    #[serde(serialize_with = "real")]
    value: f64,
}

pub fn run(args: &EstimateArgs, global: &Global) -> Outcome {
    if args.replicas == 0 {
        return Err(Failure::Usage("--replicas must be at least 1".into()));
    }
    let target = Target::parse(&args.dist)?;
    let name = target.name();
    let (report, signal) = match target {
        Target::Analytic(dist) => {
            if args.kernel.is_some() || args.burnin.is_some() || args.sigma0.is_some() || args.sigma_min.is_some() {
                return Err(Failure::Usage("kernel options apply to black-box targets only".into()));
            }
            let scheme = build_scheme(&args.scheme, args.n, Some((&args.dist, &dist)))?;
            execute(|| ExactSampler::new(dist.clone()), args, global, &name, scheme)?
        }
        Target::BlackBox(bb) => {
            let mut config = KernelConfig::for_target(&bb);
            if let Some(k) = &args.kernel {
                config.kind = k.parse::<KernelKind>()?;
            }
            if let Some(b) = args.burnin {
                if b == 0 {
                    return Err(Failure::Usage("--burnin must be at least 1".into()));
                }
                config.burn_in = b;
            }
            if let Some(s) = args.sigma0 {
                config.sigma0 = s;
            }
            if let Some(s) = args.sigma_min {
                config.sigma_min = s;
            }
            config.validate(&bb)?;
            if args.n < bb.dimension {
                eprintln!(
                    "warning: N = {} is below the input dimension {}; chains may not mix",
                    args.n, bb.dimension
                );
            }
            let scheme = build_scheme(&args.scheme, args.n, None)?;
            execute(
                || McmcSampler::new(bb.clone(), config).expect("validated kernel"),
                args,
                global,
                &name,
                scheme,
            )?
        }
    };
    match global.sink.format {
        Format::Json => global.sink.json(&report)?,
        Format::Csv => {
            let rows: Vec<_> = report
                .replica_values
                .iter()
                .enumerate()
                .map(|(replica, &value)| ReplicaRow {
                    estimator: &report.estimator,
                    distribution: &report.distribution,
                    n: report.n,
                    replica,
                    value,
                })
                .collect();
            global.sink.csv(&rows)?;
        }
    }
    Ok(signal)
}

/// Parses a scheme spec. `optimal` needs the law in closed form.
fn build_scheme(
    spec: &str,
    n: usize,
    analytic: Option<(&str, &Arc<dyn TargetDistribution>)>,
) -> Result<RandomizationScheme, Failure> {
    let spec = spec.trim();
    if spec == "geom:app" {
        return Ok(RandomizationScheme::geometric(beta_app(n)?)?);
    }
    if let Some(v) = spec.strip_prefix("geom:beta=") {
        let beta = v
            .parse::<f64>()
            .map_err(|_| Failure::Usage(format!("bad geometric parameter `{v}`")))?;
        return Ok(RandomizationScheme::geometric(beta)?);
    }
    if spec == "optimal" {
        let (dist_spec, dist) =
            analytic.ok_or_else(|| Failure::Usage("scheme `optimal` needs an analytic distribution".into()))?;
        let mean = dist.mean()?;
        let mut len = 64;
        loop {
            let q = q_sequence_for(dist_spec, dist.as_ref(), n, len)?;
            match optimal_scheme(&q, mean, n) {
                Ok(opt) => return Ok(opt.scheme),
                Err(Error::ExtendQSequence(_)) if len < 16_384 => len *= 2,
                Err(e) => return Err(e.into()),
            }
        }
    }
    if let Some(path) = spec.strip_prefix("explicit-file:") {
        #[derive(serde::Deserialize)]
        struct ExplicitFile {
            table: Vec<f64>,
            tail_ratio: f64,
        }
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {path}: {e}")))?;
        let file: ExplicitFile =
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("bad scheme file {path}: {e}")))?;
        return Ok(RandomizationScheme::explicit(file.table, file.tail_ratio)?);
    }
    Err(Failure::Usage(format!("unknown scheme `{spec}`")))
}

/// Closed form for Pareto laws, quadrature otherwise.
pub fn q_sequence_for(spec: &str, dist: &dyn TargetDistribution, n: usize, len: usize) -> Result<QSequence, Failure> {
    match pareto_index(spec) {
        Some(a) => Ok(ParetoOracle::new(a)?.q_sequence(n, len)?),
        None => Ok(q_sequence_numeric(dist, n, len, 1e-8)?),
    }
}

pub fn pareto_index(spec: &str) -> Option<f64> {
    spec.trim().strip_prefix("pareto:a=")?.trim().parse().ok()
}

fn execute<S, F>(
    make: F,
    args: &EstimateArgs,
    global: &Global,
    name: &str,
    scheme: RandomizationScheme,
) -> Result<(EstimateReport, Option<String>), Failure>
where
    S: LevelSampler,
    F: Fn() -> S + Sync + Send,
{
    let (n, seed, threads) = (args.n, global.seed, global.threads);
    let burn_in = make().conditional_cost();
    let estimator = args.estimator.label();
    let report = |values, cost, evaluations, scheme: Option<String>, params| {
        EstimateReport::from_values(estimator, name, n, scheme, burn_in, values, cost, evaluations, seed, params)
    };
    match args.estimator {
        EstimatorKind::Z => {
            let draws = run_replicas(args.replicas, seed, threads, |_, rng| {
                let mut sampler = make();
                randomized_z(&mut sampler, n, &scheme, rng)
            });
            let (ok, failed) = split(draws);
            let cost = ok.iter().map(|d| d.cost).sum();
            let exhausted = ok.iter().filter(|d| d.exhausted).count();
            let params = serde_json::json!({
                "truncations": ok.iter().map(|d| d.truncation).collect::<Vec<_>>(),
                "exhausted_replicas": exhausted,
                "failed_replicas": failed.len(),
                "first_error": failed.first(),
            });
            let values = ok.iter().map(|d| d.value).collect();
            let mut signal = failure_signal(&failed, args.replicas);
            if signal.is_none() && exhausted > 0 {
                signal = Some(format!("{exhausted} replicas exhausted the support and report partial sums"));
            }
            Ok((report(values, cost, cost, Some(scheme.label()), params), signal))
        }
        EstimatorKind::Alpha => {
            let budget = args
                .budget
                .ok_or_else(|| Failure::Usage("the alpha estimator needs --budget".into()))?;
            match alpha_budget(&make, name, n, &scheme, budget, burn_in, seed, threads) {
                Ok(r) => {
                    let exhausted = r.params["exhausted_replicas"].as_u64().unwrap_or(0);
                    let signal = (exhausted > 0)
                        .then(|| format!("{exhausted} replicas exhausted the support and report partial sums"));
                    Ok((r, signal))
                }
                Err(e @ (Error::BudgetExhausted { .. } | Error::ExhaustedSupport { .. } | Error::NoSeed)) => {
                    let msg = e.to_string();
                    let params = serde_json::json!({ "budget": budget, "error": msg });
                    Ok((report(Vec::new(), 0, 0, Some(scheme.label()), params), Some(msg)))
                }
                Err(e) => Err(e.into()),
            }
        }
        kind => {
            let rule = match kind {
                EstimatorKind::NsIncrement => StoppingRule::IncrementFraction { epsilon: args.eps },
                EstimatorKind::NsInformation => StoppingRule::InformationFactor { factor: args.factor },
                _ => StoppingRule::FixedIterations {
                    iterations: args.iterations.unwrap_or(100 * n as u64),
                },
            };
            rule.validate()?;
            let runs = run_replicas(args.replicas, seed, threads, |_, rng| {
                let mut sampler = make();
                run_ns_adaptive(&mut sampler, n, rule, rng)
            });
            let (ok, failed) = split(runs);
            let cost = ok.iter().map(|r| r.cost).sum();
            let values = ok
                .iter()
                .map(|r| if kind == EstimatorKind::IdealDeep { r.ideal } else { r.ns })
                .collect();
            let params = serde_json::json!({
                "rule": rule,
                "iterations": ok.iter().map(|r| r.iterations).collect::<Vec<_>>(),
                "failed_replicas": failed.len(),
                "first_error": failed.first(),
            });
            let signal = failure_signal(&failed, args.replicas);
            Ok((report(values, cost, cost, None, params), signal))
        }
    }
}

fn split<T>(results: Vec<ppmc_core::Result<T>>) -> (Vec<T>, Vec<String>) {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => failed.push(e.to_string()),
        }
    }
    (ok, failed)
}

fn failure_signal(failed: &[String], replicas: usize) -> Option<String> {
    failed
        .first()
        .map(|first| format!("{} of {replicas} replicas failed; first error: {first}", failed.len()))
}
