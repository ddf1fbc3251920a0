//! The black-box experiments: spike evidence at fixed iteration counts,
//! the adaptive stopping rule on the spike, and the heavy-tailed fixed-budget
//! comparison.

use std::time::Instant;

use serde::Serialize;

use crate::distributions::BlackBoxTarget;
use crate::error::Result;
use crate::estimators::{alpha_budget, randomized_z, run_ns_adaptive, StoppingRule};
use crate::mcmc::{KernelConfig, McmcSampler};
use crate::numeric::{mean_variance, median};
use crate::randomize::{beta_app, RandomizationScheme};
use crate::replicas::{derive_seed, run_replicas};
use crate::report::{real, reals};

/// Shared execution settings.
#[derive(Debug, Clone)]
pub struct ExperimentOptions {
    pub seed: u64,
    pub threads: Option<usize>,
    /// Kernel tuning; `None` uses [`experiment_kernel`].
    pub kernel: Option<KernelConfig>,
    /// Replicas not started by this instant are skipped and the output is
    /// marked truncated.
    pub deadline: Option<Instant>,
}

impl ExperimentOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            threads: None,
            kernel: None,
            deadline: None,
        }
    }

    fn kernel_for(&self, target: &BlackBoxTarget) -> KernelConfig {
        self.kernel.unwrap_or_else(|| experiment_kernel(target))
    }

    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// Default kernel for the experiments. The step-size floor is lowered far
/// below the general default so chains can follow the narrow level sets deep
/// inside the spike.
pub fn experiment_kernel(target: &BlackBoxTarget) -> KernelConfig {
    KernelConfig {
        sigma_min: 1e-12,
        ..KernelConfig::for_target(target)
    }
}

/// One replica of one estimator, as written to CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub experiment: String,
    pub estimator: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub replica: usize,
    #[serde(serialize_with = "real")]
    pub value: f64,
    pub iterations: u64,
    pub cost: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentOutput<S> {
    pub rows: Vec<RunRow>,
    pub summary: S,
    pub truncated: bool,
}

fn sampler(target: &BlackBoxTarget, kernel: &KernelConfig) -> Result<McmcSampler> {
    McmcSampler::new(target.clone(), *kernel)
}

/// Splits guarded replica results into completed values and a truncation flag.
fn completed<T>(results: Vec<Option<Result<T>>>) -> Result<(Vec<T>, bool)> {
    let truncated = results.iter().any(Option::is_none);
    let done = results.into_iter().flatten().collect::<Result<Vec<_>>>()?;
    Ok((done, truncated))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Summary {
    #[serde(rename = "N")]
    pub n: usize,
    pub iterations: u64,
    pub burn_in: u64,
    #[serde(serialize_with = "real")]
    pub reference: f64,
    pub replicas_ns: usize,
    pub replicas_z: usize,
    #[serde(serialize_with = "real")]
    pub mean_ns: f64,
    #[serde(serialize_with = "real")]
    pub mean_ideal: f64,
    #[serde(serialize_with = "real")]
    pub mean_z: f64,
    #[serde(serialize_with = "real")]
    pub var_ns: f64,
    #[serde(serialize_with = "real")]
    pub var_ideal: f64,
    #[serde(serialize_with = "real")]
    pub var_z: f64,
    /// `var Ẑ / var m̂`.
    #[serde(serialize_with = "real")]
    pub var_ratio: f64,
    #[serde(serialize_with = "real")]
    pub acceptance_rate: f64,
}

/// Fixed-iteration nested sampling (both weightings from the same runs,
/// `iterations_per_walk · N` events) against the randomized estimator with
/// `β_app`, over `replicas` independent runs each.
pub fn table1(
    target: &BlackBoxTarget,
    reference: f64,
    n: usize,
    replicas: usize,
    iterations_per_walk: u64,
    opts: &ExperimentOptions,
) -> Result<ExperimentOutput<Table1Summary>> {
    let kernel = opts.kernel_for(target);
    let iterations = iterations_per_walk * n as u64;
    let rule = StoppingRule::FixedIterations { iterations };
    let ns_runs = run_replicas(replicas, derive_seed(opts.seed, 0), opts.threads, |_, rng| {
        if opts.expired() {
            return None;
        }
        Some(sampler(target, &kernel).and_then(|mut s| {
            let run = run_ns_adaptive(&mut s, n, rule, rng)?;
            Ok((run, s.acceptance_rate()))
        }))
    });
    let (ns_runs, ns_cut) = completed(ns_runs)?;

    let scheme = RandomizationScheme::geometric(beta_app(n)?)?;
    let z_runs = run_replicas(replicas, derive_seed(opts.seed, 1), opts.threads, |_, rng| {
        if opts.expired() {
            return None;
        }
        Some(sampler(target, &kernel).and_then(|mut s| randomized_z(&mut s, n, &scheme, rng)))
    });
    let (z_runs, z_cut) = completed(z_runs)?;

    let mut rows = Vec::new();
    let row = |estimator: &str, replica, value, iterations, cost| RunRow {
        experiment: "table1".into(),
        estimator: estimator.into(),
        n,
        replica,
        value,
        iterations,
        cost,
    };
    for (k, (run, _)) in ns_runs.iter().enumerate() {
        rows.push(row("NS", k, run.ns, run.iterations, run.cost));
        rows.push(row("m_hat", k, run.ideal, run.iterations, run.cost));
    }
    for (k, z) in z_runs.iter().enumerate() {
        rows.push(row("Z", k, z.value, z.truncation + 1, z.cost));
    }

    let ns: Vec<f64> = ns_runs.iter().map(|(r, _)| r.ns).collect();
    let ideal: Vec<f64> = ns_runs.iter().map(|(r, _)| r.ideal).collect();
    let zs: Vec<f64> = z_runs.iter().map(|z| z.value).collect();
    let rates: Vec<f64> = ns_runs.iter().map(|(_, a)| *a).collect();
    let (mean_ns, var_ns) = mean_variance(&ns);
    let (mean_ideal, var_ideal) = mean_variance(&ideal);
    let (mean_z, var_z) = mean_variance(&zs);
    Ok(ExperimentOutput {
        rows,
        summary: Table1Summary {
            n,
            iterations,
            burn_in: kernel.burn_in,
            reference,
            replicas_ns: ns.len(),
            replicas_z: zs.len(),
            mean_ns,
            mean_ideal,
            mean_z,
            var_ns,
            var_ideal,
            var_z,
            var_ratio: var_z / var_ideal,
            acceptance_rate: mean_variance(&rates).0,
        },
        truncated: ns_cut || z_cut,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptiveSummary {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(serialize_with = "real")]
    pub epsilon: f64,
    #[serde(serialize_with = "real")]
    pub reference: f64,
    /// Median of the nested-sampling estimate under the increment rule.
    #[serde(serialize_with = "real")]
    pub median_ns: f64,
    #[serde(serialize_with = "real")]
    pub median_ideal: f64,
    #[serde(serialize_with = "real")]
    pub median_z: f64,
    #[serde(serialize_with = "real")]
    pub median_iterations: f64,
    #[serde(serialize_with = "real")]
    pub median_z_iterations: f64,
}

/// Nested sampling stopped by the increment rule against the randomized
/// estimator with `β_app` at the same `N`.
pub fn adaptive(
    target: &BlackBoxTarget,
    reference: f64,
    n: usize,
    epsilon: f64,
    replicas: usize,
    opts: &ExperimentOptions,
) -> Result<ExperimentOutput<AdaptiveSummary>> {
    let kernel = opts.kernel_for(target);
    let rule = StoppingRule::IncrementFraction { epsilon };
    let ns_runs = run_replicas(replicas, derive_seed(opts.seed, 2), opts.threads, |_, rng| {
        if opts.expired() {
            return None;
        }
        Some(sampler(target, &kernel).and_then(|mut s| run_ns_adaptive(&mut s, n, rule, rng)))
    });
    let (ns_runs, ns_cut) = completed(ns_runs)?;
    let scheme = RandomizationScheme::geometric(beta_app(n)?)?;
    let z_runs = run_replicas(replicas, derive_seed(opts.seed, 3), opts.threads, |_, rng| {
        if opts.expired() {
            return None;
        }
        Some(sampler(target, &kernel).and_then(|mut s| randomized_z(&mut s, n, &scheme, rng)))
    });
    let (z_runs, z_cut) = completed(z_runs)?;

    let mut rows = Vec::new();
    for (k, run) in ns_runs.iter().enumerate() {
        for (estimator, value) in [("ns-increment", run.ns), ("m_hat-increment", run.ideal)] {
            rows.push(RunRow {
                experiment: "adaptive".into(),
                estimator: estimator.into(),
                n,
                replica: k,
                value,
                iterations: run.iterations,
                cost: run.cost,
            });
        }
    }
    for (k, z) in z_runs.iter().enumerate() {
        rows.push(RunRow {
            experiment: "adaptive".into(),
            estimator: "Z".into(),
            n,
            replica: k,
            value: z.value,
            iterations: z.truncation + 1,
            cost: z.cost,
        });
    }
    let pick = |f: &dyn Fn(&crate::estimators::NestedRun) -> f64| median(&ns_runs.iter().map(f).collect::<Vec<_>>());
    Ok(ExperimentOutput {
        rows,
        summary: AdaptiveSummary {
            n,
            epsilon,
            reference,
            median_ns: pick(&|r| r.ns),
            median_ideal: pick(&|r| r.ideal),
            median_z: median(&z_runs.iter().map(|z| z.value).collect::<Vec<_>>()),
            median_iterations: pick(&|r| r.iterations as f64),
            median_z_iterations: median(&z_runs.iter().map(|z| (z.truncation + 1) as f64).collect::<Vec<_>>()),
        },
        truncated: ns_cut || z_cut,
    })
}

/// Settings of the fixed-budget comparison. The budget counts conditional
/// draws (`N + T` per randomized replica, `N + iterations` per nested
/// sampling run) whatever the burn-in of the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetConfig {
    pub budget: u64,
    pub replicas: usize,
    /// Walk count of each randomized replica.
    pub alpha_n: usize,
    /// Walk count of the nested-sampling runs; they stop after `100 · N`
    /// iterations.
    pub ns_n: usize,
}

impl BudgetConfig {
    pub fn new(budget: u64, replicas: usize) -> Self {
        Self {
            budget,
            replicas,
            alpha_n: 20,
            ns_n: ((budget / 101) as usize).max(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetSummary {
    pub config: BudgetConfig,
    #[serde(serialize_with = "real")]
    pub reference: f64,
    #[serde(serialize_with = "real")]
    pub median_ns: f64,
    #[serde(serialize_with = "real")]
    pub median_alpha: f64,
    /// `log10(reference) − log10(median NS)`.
    #[serde(serialize_with = "real")]
    pub ns_orders_below: f64,
    #[serde(serialize_with = "reals")]
    pub alpha_log10: Vec<f64>,
    /// Replicas of α̂ with `|log10 α̂ − log10 reference| ≤ 1`.
    pub alpha_near_reference: usize,
}

/// Nested sampling at `100 · N` iterations against the fixed-budget
/// randomized average, both at budget `c`, over `replicas` runs.
pub fn budget(
    target: &BlackBoxTarget,
    reference: f64,
    config: BudgetConfig,
    opts: &ExperimentOptions,
) -> Result<ExperimentOutput<BudgetSummary>> {
    let kernel = opts.kernel_for(target);
    sampler(target, &kernel)?;
    let iterations = 100 * config.ns_n as u64;
    let rule = StoppingRule::FixedIterations { iterations };
    let ns_runs = run_replicas(config.replicas, derive_seed(opts.seed, 4), opts.threads, |_, rng| {
        if opts.expired() {
            return None;
        }
        Some(sampler(target, &kernel).and_then(|mut s| run_ns_adaptive(&mut s, config.ns_n, rule, rng)))
    });
    let (ns_runs, ns_cut) = completed(ns_runs)?;

    let scheme = RandomizationScheme::geometric(beta_app(config.alpha_n)?)?;
    let label = target.name.clone();
    let alpha_runs = run_replicas(config.replicas, derive_seed(opts.seed, 5), opts.threads, |k, _| {
        if opts.expired() {
            return None;
        }
        // Inner replicas share the enclosing pool.
        Some(alpha_budget(
            || McmcSampler::new(target.clone(), kernel).expect("validated kernel"),
            &label,
            config.alpha_n,
            &scheme,
            config.budget,
            1,
            derive_seed(opts.seed, 1000 + k as u64),
            None,
        ))
    });
    let (alpha_runs, alpha_cut) = completed(alpha_runs)?;

    let mut rows = Vec::new();
    for (k, run) in ns_runs.iter().enumerate() {
        rows.push(RunRow {
            experiment: "budget".into(),
            estimator: "ns-fixed".into(),
            n: config.ns_n,
            replica: k,
            value: run.ns,
            iterations: run.iterations,
            cost: config.ns_n as u64 + run.iterations - 1,
        });
    }
    for (k, report) in alpha_runs.iter().enumerate() {
        rows.push(RunRow {
            experiment: "budget".into(),
            estimator: "alpha".into(),
            n: config.alpha_n,
            replica: k,
            value: report.value,
            iterations: report.replicas as u64,
            cost: report.total_cost,
        });
    }
    let median_ns = median(&ns_runs.iter().map(|r| r.ns).collect::<Vec<_>>());
    let alpha: Vec<f64> = alpha_runs.iter().map(|r| r.value).collect();
    let alpha_log10: Vec<f64> = alpha.iter().map(|v| v.log10()).collect();
    let target_log = reference.log10();
    Ok(ExperimentOutput {
        rows,
        summary: BudgetSummary {
            config,
            reference,
            median_ns,
            median_alpha: median(&alpha),
            ns_orders_below: target_log - median_ns.log10(),
            alpha_near_reference: alpha_log10.iter().filter(|l| (*l - target_log).abs() <= 1.0).count(),
            alpha_log10,
        },
        truncated: ns_cut || alpha_cut,
    })
}
