use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use ppmc_core::distributions::{Exponential, Pareto};
use ppmc_core::estimators::{prob_mvue, randomized_z};
use ppmc_core::numeric::mean_variance;
use ppmc_core::pareto_oracle::ParetoOracle;
use ppmc_core::randomize::{beta_app, minimize_beta, q_sequence_numeric, RandomizationScheme};
use ppmc_core::replicas::run_replicas;
use ppmc_core::report::SCHEMA_VERSION;
use ppmc_core::stats::{ks_test, within_stderr};
use ppmc_core::walk::{generate_merged, ExactSampler, MergedStream};

use crate::output::Format;
use crate::{Failure, Global, Outcome};

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn exact_exp() -> ExactSampler {
    ExactSampler::new(Arc::new(Exponential::new(1.0).expect("rate 1")))
}

fn poisson_gaps(g: &Global) -> Check {
    let n = 5;
    let times = run_replicas(1, g.seed, g.threads, |_, rng| {
        let dist = Exponential::new(1.0).expect("rate 1");
        generate_merged(&mut exact_exp(), n, 2000, rng).and_then(|m| m.poisson_times(&dist))
    })
    .remove(0);
    match times {
        Ok(times) => {
            let gaps: Vec<f64> = times
                .iter()
                .scan(0.0, |prev, &t| {
                    let gap = t - *prev;
                    *prev = t;
                    Some(gap)
                })
                .collect();
            let ks = ks_test(&gaps, |x| -(-(n as f64) * x).exp_m1());
            Check {
                name: "poisson-gaps",
                pass: ks.p_value > 1e-3,
                detail: format!("KS vs Exp(5) on {} gaps: p = {:.3}", gaps.len(), ks.p_value),
            }
        }
        Err(e) => failed("poisson-gaps", e),
    }
}

fn mvue(g: &Global) -> Check {
    let (n, x, replicas) = (20, 3.0, 4000);
    let estimates = run_replicas(replicas, g.seed, g.threads, |_, rng| {
        let mut sampler = exact_exp();
        let mut stream = MergedStream::new(&mut sampler, n, rng)?;
        let mut count = 0u64;
        while stream.peek_level() < x {
            stream.advance(rng)?;
            count += 1;
        }
        prob_mvue(count, n)
    });
    let estimates = match estimates.into_iter().collect::<Result<Vec<_>, _>>() {
        Ok(v) => v,
        Err(e) => return failed("mvue", e),
    };
    let p = (-x).exp();
    let (mean, var) = mean_variance(&estimates);
    let stderr = (var / replicas as f64).sqrt();
    Check {
        name: "mvue",
        pass: within_stderr(mean, stderr, p, 4.0),
        detail: format!("mean {mean:.5e} vs {p:.5e} ({:.2} stderr)", (mean - p) / stderr),
    }
}

fn z_pareto(g: &Global, threads: Option<usize>) -> Result<Vec<f64>, ppmc_core::Error> {
    let n = 100;
    let scheme = RandomizationScheme::geometric(beta_app(n)?)?;
    run_replicas(2000, g.seed, threads, |_, rng| {
        let mut sampler = ExactSampler::new(Arc::new(Pareto::new(2.0)?));
        randomized_z(&mut sampler, n, &scheme, rng).map(|d| d.value)
    })
    .into_iter()
    .collect()
}

fn z_unbiased(g: &Global) -> Check {
    match z_pareto(g, g.threads) {
        Ok(values) => {
            let (mean, var) = mean_variance(&values);
            let stderr = (var / values.len() as f64).sqrt();
            Check {
                name: "z-pareto",
                pass: within_stderr(mean, stderr, 2.0, 4.0),
                detail: format!("mean {mean:.4} vs 2 ({:.2} stderr), variance {var:.4} vs {:.4}", (mean - 2.0) / stderr, 2.0 / 99.0),
            }
        }
        Err(e) => failed("z-pareto", e),
    }
}

fn q_quadrature(_: &Global) -> Check {
    let closed = ParetoOracle::new(2.0).and_then(|o| o.q_sequence(2, 3));
    let numeric = Pareto::new(2.0).and_then(|p| q_sequence_numeric(&p, 2, 3, 1e-10));
    match (closed, numeric) {
        (Ok(c), Ok(q)) => {
            let worst = c
                .values
                .iter()
                .zip(&q.values)
                .map(|(a, b)| ((a - b) / a).abs())
                .fold(0.0, f64::max);
            Check {
                name: "q-quadrature",
                pass: worst < 1e-6,
                detail: format!("closed form vs quadrature, worst relative gap {worst:.1e}"),
            }
        }
        (Err(e), _) | (_, Err(e)) => failed("q-quadrature", e),
    }
}

fn beta_closed_form(_: &Global) -> Check {
    let oracle = ParetoOracle::new(2.0).expect("a = 2");
    let mut worst: f64 = 0.0;
    for n in [2usize, 10, 100] {
        let closed = oracle.beta_opt(n).unwrap_or(f64::NAN);
        let numeric = minimize_beta(&oracle, n as f64).map_or(f64::NAN, |b| b.beta);
        worst = worst.max(((closed - numeric) / closed).abs());
    }
    Check {
        name: "beta-opt",
        pass: worst < 1e-6,
        detail: format!("closed-form vs numeric argmin, worst relative gap {worst:.1e}"),
    }
}

fn determinism(g: &Global) -> Check {
    match (z_pareto(g, Some(1)), z_pareto(g, Some(3))) {
        (Ok(a), Ok(b)) => {
            let same = a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits());
            Check {
                name: "determinism",
                pass: same,
                detail: format!("1 vs 3 worker threads: {}", if same { "bit-identical" } else { "different" }),
            }
        }
        (Err(e), _) | (_, Err(e)) => failed("determinism", e),
    }
}

fn failed(name: &'static str, e: ppmc_core::Error) -> Check {
    Check {
        name,
        pass: false,
        detail: e.to_string(),
    }
}

pub fn run(global: &Global) -> Outcome {
    let checks: Vec<Check> = [poisson_gaps, mvue, z_unbiased, q_quadrature, beta_closed_form, determinism]
        .iter()
        .map(|check| {
            let c = check(global);
            eprintln!("[{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            c
        })
        .collect();
    let failures = checks.iter().filter(|c| !c.pass).count();
    match global.sink.format {
        Format::Json => global.sink.json(&json!({
            "schema": SCHEMA_VERSION,
            "seed": global.seed,
            "passed": failures == 0,
            "checks": checks,
        }))?,
        Format::Csv => global.sink.csv(&checks)?,
    }
    if failures > 0 {
        return Err(Failure::Runtime(format!("{failures} self-test checks failed")));
    }
    Ok(None)
}
