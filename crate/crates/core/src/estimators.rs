//! Tail-probability and mean estimators built on the merged walk process.

use serde::Serialize;

use crate::error::{check_n, Error, Result};
use crate::numeric::CompensatedSum;
use crate::randomize::RandomizationScheme;
use crate::replicas::{replica_rng, run_replicas, SETUP_STREAM};
use crate::report::EstimateReport;
use crate::walk::{LevelSampler, MergedProcess, MergedStream, SimRng};

/// Hard iteration cap of the adaptive stopping rules.
pub const ITERATION_CAP: u64 = 10_000_000;

/// `(1 − 1/N)^M`, the minimum-variance unbiased estimator of `P(X > x)` given
/// the pooled count `M` of walk states at or below x.
pub fn prob_mvue(count: u64, n: usize) -> Result<f64> {
    check_n(n)?;
    Ok((count as f64 * (-1.0 / n as f64).ln_1p()).exp())
}

/// `exp(−M/N)`, biased upwards by a term of order 1/N.
pub fn prob_suboptimal(count: u64, n: usize) -> Result<f64> {
    check_n(n)?;
    Ok((-(count as f64) / n as f64).exp())
}

/// Expectation of [`prob_suboptimal`]: `p^{N(1 − e^{−1/N})}`.
pub fn prob_suboptimal_mean(p: f64, n: usize) -> Result<f64> {
    check_n(n)?;
    let nf = n as f64;
    Ok(p.powf(-nf * (-1.0 / nf).exp_m1()))
}

/// Mean and variance of [`prob_mvue`]: `(p, p²(p^{−1/N} − 1))`.
pub fn prob_oracle_moments(p: f64, n: usize) -> Result<(f64, f64)> {
    check_n(n)?;
    if !(p > 0.0) || p > 1.0 {
        return Err(Error::DegenerateProbability);
    }
    Ok((p, p * p * (-p.ln() / n as f64).exp_m1()))
}

fn check_depth(merged: &MergedProcess, n: usize) -> Result<()> {
    if n > merged.len() {
        return Err(Error::InsufficientDepth {
            requested: n,
            available: merged.len(),
        });
    }
    Ok(())
}

/// `m̂_n = Σ_{i=0}^{n−1} (X_{i+1} − X_i)(1 − 1/N)^i` with `X_0 = 0`.
pub fn truncated_sum(merged: &MergedProcess, n: usize) -> Result<f64> {
    check_depth(merged, n)?;
    let ln_w = (-1.0 / merged.n_walks as f64).ln_1p();
    let mut acc = CompensatedSum::new();
    let mut prev = 0.0;
    for (i, &x) in merged.levels[..n].iter().enumerate() {
        acc.add((x - prev) * (i as f64 * ln_w).exp());
        prev = x;
    }
    Ok(acc.value())
}

/// Nested-sampling sum `Σ_{i=1}^{n} X_i (e^{(1−i)/N} − e^{−i/N})`.
pub fn ns_original(merged: &MergedProcess, n: usize) -> Result<f64> {
    check_depth(merged, n)?;
    let nf = merged.n_walks as f64;
    let mut acc = CompensatedSum::new();
    for (k, &x) in merged.levels[..n].iter().enumerate() {
        acc.add(x * ns_weight(k as u64 + 1, nf));
    }
    Ok(acc.value())
}

/// `e^{(1−i)/N} − e^{−i/N}`.
fn ns_weight(i: u64, nf: f64) -> f64 {
    (-(i as f64) / nf).exp() * (1.0 / nf).exp_m1()
}

/// One realization of the randomized estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZDraw {
    pub value: f64,
    pub truncation: u64,
    /// Generator calls made (`N + bT` unless the support was exhausted).
    pub cost: u64,
    /// The support ran out before `T + 1` events; the value is the partial sum.
    pub exhausted: bool,
}

/// Randomly truncated estimator: draws `T` from `scheme`, generates
/// `X_1 .. X_{T+1}` and returns `Σ_{i=0}^{T} (X_{i+1} − X_i)(1 − 1/N)^i / β_i`.
pub fn randomized_z<S: LevelSampler>(
    sampler: &mut S,
    n: usize,
    scheme: &RandomizationScheme,
    rng: &mut SimRng,
) -> Result<ZDraw> {
    scheme.validate()?;
    let t = scheme.sample(rng);
    randomized_z_truncated(sampler, n, scheme, t, rng)
}

/// [`randomized_z`] with the truncation index given.
pub fn randomized_z_truncated<S: LevelSampler>(
    sampler: &mut S,
    n: usize,
    scheme: &RandomizationScheme,
    truncation: u64,
    rng: &mut SimRng,
) -> Result<ZDraw> {
    check_n(n)?;
    let start = sampler.evaluations();
    let ln_w = (-1.0 / n as f64).ln_1p();
    let mut stream = MergedStream::new(sampler, n, rng)?;
    let mut acc = CompensatedSum::new();
    let mut prev = 0.0;
    let mut exhausted = false;
    for i in 0..=truncation {
        let level = stream.current().level;
        let log_weight = i as f64 * ln_w - scheme.log_survival(i);
        acc.add((level - prev) * log_weight.exp());
        prev = level;
        if i < truncation {
            match stream.advance(rng) {
                Ok(()) => {}
                Err(Error::ExhaustedSupport { .. }) => {
                    exhausted = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
    }
    let cost = stream.sampler().evaluations() - start;
    Ok(ZDraw {
        value: acc.value(),
        truncation,
        cost,
        exhausted,
    })
}

/// Fixed-budget average of randomized replicas.
///
/// Truncation indices are drawn up front from a dedicated stream, each
/// charged `N + bT`, until the budget is exceeded; the replica that would
/// exceed it is discarded. The kept replicas then run in parallel.
#[allow(clippy::too_many_arguments)]
pub fn alpha_budget<S, F>(
    make_sampler: F,
    distribution: &str,
    n: usize,
    scheme: &RandomizationScheme,
    budget: u64,
    burn_in: u64,
    seed: u64,
    threads: Option<usize>,
) -> Result<EstimateReport>
where
    S: LevelSampler,
    F: Fn() -> S + Sync + Send,
{
    check_n(n)?;
    scheme.validate()?;
    let mut setup = replica_rng(seed, SETUP_STREAM);
    let mut truncations = Vec::new();
    let mut spent = 0u64;
    loop {
        let t = scheme.sample(&mut setup);
        let charge = n as u64 + burn_in.saturating_mul(t);
        match spent.checked_add(charge) {
            Some(total) if total <= budget => {
                spent = total;
                truncations.push(t);
            }
            _ => {
                if truncations.is_empty() {
                    return Err(Error::BudgetExhausted { budget, needed: charge });
                }
                break;
            }
        }
    }
    let draws = run_replicas(truncations.len(), seed, threads, |i, rng| {
        let mut sampler = make_sampler();
        randomized_z_truncated(&mut sampler, n, scheme, truncations[i], rng)
    });
    let draws = draws.into_iter().collect::<Result<Vec<_>>>()?;
    let evaluations = draws.iter().map(|d| d.cost).sum();
    let exhausted = draws.iter().filter(|d| d.exhausted).count();
    let values = draws.iter().map(|d| d.value).collect();
    Ok(EstimateReport::from_values(
        "alpha",
        distribution,
        n,
        Some(scheme.label()),
        burn_in,
        values,
        spent,
        evaluations,
        seed,
        serde_json::json!({
            "budget": budget,
            "truncations": truncations,
            "exhausted_replicas": exhausted,
        }),
    ))
}

/// Termination rule for a nested-sampling run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StoppingRule {
    /// Exactly `iterations` events.
    FixedIterations { iterations: u64 },
    /// Stop once the latest weighted increment falls below `epsilon` times
    /// the running estimate.
    IncrementFraction { epsilon: f64 },
    /// Stop once the iteration count exceeds `factor · N · H`, with H the
    /// running information estimate.
    InformationFactor { factor: f64 },
}

impl StoppingRule {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, value| {
            Err(Error::InvalidParameter {
                name,
                value,
                reason: "must be positive",
            })
        };
        match *self {
            StoppingRule::FixedIterations { iterations } if iterations < 1 => bad("iterations", iterations as f64),
            StoppingRule::IncrementFraction { epsilon } if !(epsilon > 0.0) => bad("epsilon", epsilon),
            StoppingRule::InformationFactor { factor } if !(factor > 0.0) => bad("factor", factor),
            _ => Ok(()),
        }
    }
}

/// Both weightings of one nested-sampling run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NestedRun {
    /// `m̂_n` with the `(1 − 1/N)^i` weights.
    pub ideal: f64,
    /// Classical nested-sampling weights.
    pub ns: f64,
    pub iterations: u64,
    /// Running information estimate at termination.
    pub information: f64,
    pub cost: u64,
    pub last_level: f64,
}

/// Runs the merged process until `rule` fires. The information after j
/// iterations is `H_j = Σ_{i≤j} (δ_i/m̃_j) log(X_i/m̃_j)` with `δ_i` the
/// nested-sampling increments and `m̃_j` their sum.
pub fn run_ns_adaptive<S: LevelSampler>(sampler: &mut S, n: usize, rule: StoppingRule, rng: &mut SimRng) -> Result<NestedRun> {
    check_n(n)?;
    rule.validate()?;
    let start = sampler.evaluations();
    let nf = n as f64;
    let ln_w = (-1.0 / nf).ln_1p();
    let mut stream = MergedStream::new(sampler, n, rng)?;
    let mut ideal = CompensatedSum::new();
    let mut ns = CompensatedSum::new();
    let mut weighted_log = CompensatedSum::new();
    let mut prev = 0.0;
    let mut i: u64 = 0;
    let mut information = 0.0;
    loop {
        let level = stream.current().level;
        i += 1;
        ideal.add((level - prev) * ((i - 1) as f64 * ln_w).exp());
        let delta = level * ns_weight(i, nf);
        ns.add(delta);
        if level > 0.0 && delta > 0.0 {
            weighted_log.add(delta * level.ln());
        }
        prev = level;
        let total = ns.value();
        if total > 0.0 {
            information = weighted_log.value() / total - total.ln();
        }
        let stop = match rule {
            StoppingRule::FixedIterations { iterations } => i >= iterations,
            StoppingRule::IncrementFraction { epsilon } => delta.abs() < epsilon * total.abs(),
            StoppingRule::InformationFactor { factor } => i as f64 > factor * nf * information,
        };
        if stop {
            break;
        }
        if i >= ITERATION_CAP {
            return Err(Error::CapReached(i));
        }
        stream.advance(rng)?;
    }
    let cost = stream.sampler().evaluations() - start;
    Ok(NestedRun {
        ideal: ideal.value(),
        ns: ns.value(),
        iterations: i,
        information,
        cost,
        last_level: prev,
    })
}
