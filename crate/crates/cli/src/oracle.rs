use std::sync::Arc;

use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use ppmc_core::distributions::{Target, TargetDistribution};
use ppmc_core::pareto_oracle::{n_app, ParetoOracle};
use ppmc_core::randomize::{
    beta_app, gamma, minimize_beta, optimal_scheme, optimize_geometric, work_variance, work_variance_geometric,
    OptimalScheme, QSequence, RandomizationScheme, VarianceModel,
};
use ppmc_core::report::{real, SCHEMA_VERSION};
use ppmc_core::Error;

use crate::estimate::{pareto_index, q_sequence_for};
use crate::output::{num, Format};
use crate::{Failure, Global, Outcome};

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Pareto tail index.
    #[arg(long)]
    a: f64,

    /// Number of walks.
    #[arg(long = "N", default_value_t = 100)]
    n: usize,

    /// Geometric parameter: app, opt or a number.
    #[arg(long, default_value = "app")]
    beta: String,

    /// Exponent of the importance-sampling proposal.
    #[arg(long)]
    b: Option<f64>,
}

/// Number of leading q-coefficients echoed by `oracle`.
const Q_HEAD: usize = 8;

pub fn run_oracle(args: &OracleArgs, global: &Global) -> Outcome {
    if !(args.a > 0.0) {
        return Err(Failure::Usage(format!("tail index must be positive, got {}", args.a)));
    }
    if args.n < 2 {
        return Err(Failure::Usage(format!("N must be at least 2, got {}", args.n)));
    }
    let mut doc = Map::new();
    doc.insert("schema".into(), json!(SCHEMA_VERSION));
    doc.insert("a".into(), num(args.a));
    doc.insert("N".into(), json!(args.n));
    match ParetoOracle::new(args.a) {
        Ok(oracle) => oracle_fields(&oracle, args, &mut doc)?,
        Err(Error::InfiniteMean(_)) => {
            let inf = num(f64::INFINITY);
            for key in ["m", "var_mc", "var_ideal", "var_z", "work_variance"] {
                doc.insert(key.into(), inf.clone());
            }
            if args.b.is_some() {
                doc.insert("var_is".into(), inf);
            }
        }
        Err(e) => return Err(e.into()),
    }
    let doc = Value::Object(doc);
    match global.sink.format {
        Format::Json => global.sink.json(&doc)?,
        Format::Csv => {
            #[derive(Serialize)]
            struct Row {
                quantity: String,
                value: String,
            }
            let rows: Vec<Row> = doc
                .as_object()
                .expect("object")
                .iter()
                .map(|(k, v)| Row {
                    quantity: k.clone(),
                    value: match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    },
                })
                .collect();
            global.sink.csv(&rows)?;
        }
    }
    Ok(None)
}

fn oracle_fields(oracle: &ParetoOracle, args: &OracleArgs, doc: &mut Map<String, Value>) -> Result<(), Failure> {
    let n = args.n;
    let nf = n as f64;
    let m = oracle.mean();
    let v = oracle.variances(n, args.b)?;
    doc.insert("m".into(), num(m));
    doc.insert("var_mc".into(), num(v.mc));
    doc.insert("var_ideal".into(), num(v.ideal));
    if let Some(b) = args.b {
        doc.insert("b".into(), num(b));
        doc.insert("var_is".into(), num(v.is.unwrap_or(f64::INFINITY)));
    }
    let beta_opt = oracle.beta_opt(n).ok();
    let beta = match args.beta.trim() {
        "app" => beta_app(n)?,
        "opt" => beta_opt.ok_or_else(|| Failure::Usage(format!("no optimal geometric parameter at N = {n}")))?,
        other => other
            .parse::<f64>()
            .map_err(|_| Failure::Usage(format!("--beta expects app, opt or a number, got `{other}`")))?,
    };
    let g = gamma(beta, n)?;
    let var_z = oracle.var_z_geometric(beta, n)?;
    doc.insert("beta_kind".into(), json!(args.beta.trim()));
    doc.insert("beta".into(), num(beta));
    doc.insert("gamma".into(), num(g));
    doc.insert("var_z".into(), num(var_z));
    doc.insert("expected_cost".into(), num(nf + 1.0 / beta.exp_m1()));
    doc.insert("work_variance".into(), num(work_variance_geometric(oracle, beta, nf)));
    doc.insert("var_ratio_z_ideal".into(), num(var_z / v.ideal));
    doc.insert("beta_app".into(), num(beta_app(n)?));
    doc.insert("beta_opt".into(), beta_opt.map_or(Value::Null, num));
    doc.insert("n_app".into(), num(n_app(m)));
    doc.insert("work_variance_asymptote".into(), num(oracle.work_variance_asymptote(nf)));
    doc.insert("q_ratio".into(), num(oracle.q_ratio(n)));
    match oracle.i0(n) {
        Ok((i0, asymptotic)) => {
            doc.insert("i0".into(), json!(i0));
            doc.insert("i0_asymptotic".into(), num(asymptotic));
            let q = oracle.q_sequence(n, Q_HEAD)?;
            doc.insert("q_head".into(), Value::Array(q.values.iter().map(|&x| num(x)).collect()));
            doc.insert("q_total".into(), num(oracle.q_total(n)?));
        }
        Err(Error::InfiniteVariance) => {
            doc.insert("i0".into(), num(f64::INFINITY));
            doc.insert("q_total".into(), num(f64::INFINITY));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Geometric truncation, optimized over its parameter and N.
    Geometric,
    /// Optimal survival sequence for a fixed or optimized N.
    OptimalScheme,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, default_value = "pareto:a=2")]
    dist: String,

    #[arg(long, value_enum, default_value_t = Mode::Geometric)]
    mode: Mode,

    /// Fix the number of walks instead of optimizing it.
    #[arg(long = "N")]
    n: Option<usize>,

    /// Pareto sweep `a=<start>:<end>:<step>`, one row per tail index.
    #[arg(long)]
    sweep: Option<String>,

    /// Largest N searched.
    #[arg(long, default_value_t = 2000)]
    n_max: usize,
}

/// Analytic law with its spec string, plus the Pareto closed forms when available.
struct Law {
    spec: String,
    dist: Arc<dyn TargetDistribution>,
    pareto: Option<ParetoOracle>,
}

impl Law {
    fn parse(spec: &str) -> Result<Self, Failure> {
        let dist = match Target::parse(spec)? {
            Target::Analytic(d) => d,
            Target::BlackBox(_) => return Err(Failure::Usage("optimize needs an analytic distribution".into())),
        };
        let pareto = match pareto_index(spec) {
            Some(a) => Some(ParetoOracle::new(a)?),
            None => {
                dist.mean()?;
                None
            }
        };
        Ok(Self {
            spec: spec.to_string(),
            dist,
            pareto,
        })
    }

    fn mean(&self) -> f64 {
        self.dist.mean().expect("checked at parse")
    }

    /// Two-walk q-sequence as a variance model, unless the closed form exists.
    fn model(&self) -> Result<Box<dyn VarianceModel>, Failure> {
        match self.pareto {
            Some(p) => Ok(Box::new(p)),
            None => Ok(Box::new(q_sequence_for(&self.spec, self.dist.as_ref(), 2, 64)?)),
        }
    }

    /// q-sequence long enough to locate i0 at this N; `None` when the
    /// ideal variance is infinite.
    fn q_for_optimal(&self, n: usize) -> Result<Option<(QSequence, OptimalScheme)>, Failure> {
        let mean = self.mean();
        if let Some(p) = self.pareto {
            let i0 = match p.i0(n) {
                Ok((i0, _)) => i0,
                Err(Error::InfiniteVariance) => return Ok(None),
                Err(e) => return Err(e.into()),
            };
            let q = p.q_sequence(n, i0 + 3)?;
            let opt = optimal_scheme(&q, mean, n)?;
            return Ok(Some((q, opt)));
        }
        let mut len = 64;
        loop {
            let q = q_sequence_for(&self.spec, self.dist.as_ref(), n, len)?;
            if !q.ideal_variance().is_finite() {
                return Ok(None);
            }
            match optimal_scheme(&q, mean, n) {
                Ok(opt) => return Ok(Some((q, opt))),
                Err(Error::ExtendQSequence(_)) if len < 16_384 => len *= 2,
                Err(e) => return Err(e.into()),
            }
        }
    }

    fn optimal_work_variance(&self, n: usize) -> Result<f64, Failure> {
        Ok(match self.q_for_optimal(n)? {
            Some((q, opt)) => work_variance(&opt.scheme, &q, self.mean(), n),
            None => f64::INFINITY,
        })
    }
}

pub fn run_optimize(args: &OptimizeArgs, global: &Global) -> Outcome {
    if args.n_max < 2 {
        return Err(Failure::Usage("--n-max must be at least 2".into()));
    }
    if let Some(n) = args.n {
        if n < 2 {
            return Err(Failure::Usage(format!("N must be at least 2, got {n}")));
        }
    }
    if let Some(sweep) = &args.sweep {
        let rows = sweep_rows(sweep, args.n_max)?;
        match global.sink.format {
            Format::Csv => global.sink.csv(&rows)?,
            Format::Json => global.sink.json(&json!({
                "schema": SCHEMA_VERSION,
                "sweep": sweep,
                "n_max": args.n_max,
                "rows": rows,
            }))?,
        }
        return Ok(None);
    }
    let law = Law::parse(&args.dist)?;
    let mut doc = Map::new();
    doc.insert("schema".into(), json!(SCHEMA_VERSION));
    doc.insert("dist".into(), json!(law.dist.name()));
    if let Some(p) = law.pareto {
        doc.insert("a".into(), num(p.tail_index()));
    }
    doc.insert("m".into(), num(law.mean()));
    match args.mode {
        Mode::Geometric => geometric_fields(&law, args, &mut doc)?,
        Mode::OptimalScheme => optimal_fields(&law, args, &mut doc)?,
    }
    let doc = Value::Object(doc);
    match global.sink.format {
        Format::Json => global.sink.json(&doc)?,
        Format::Csv => {
            let mut row = doc.as_object().expect("object").clone();
            row.retain(|_, v| !v.is_object() && !v.is_array());
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(row.keys()).and_then(|_| {
                w.write_record(row.values().map(|v| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                }))
            })
            .map_err(|e| Failure::Runtime(e.to_string()))?;
            let bytes = w.into_inner().map_err(|e| Failure::Runtime(e.to_string()))?;
            crate::output::write_bytes(global.sink.out.as_deref(), &bytes)?;
        }
    }
    Ok(None)
}

fn geometric_fields(law: &Law, args: &OptimizeArgs, doc: &mut Map<String, Value>) -> Result<(), Failure> {
    let model = law.model()?;
    doc.insert("mode".into(), json!("geometric"));
    doc.insert("i0".into(), Value::Null);
    match args.n {
        Some(n) => {
            let best = minimize_beta(model.as_ref(), n as f64);
            doc.insert("N_opt".into(), json!(n));
            doc.insert("beta_opt".into(), best.map_or(Value::Null, |b| num(b.beta)));
            doc.insert("work_variance".into(), num(best.map_or(f64::INFINITY, |b| b.value)));
            doc.insert("residual_eq17".into(), Value::Null);
            if let Some(p) = law.pareto {
                doc.insert("beta_opt_closed_form".into(), p.beta_opt(n).map_or(Value::Null, num));
            }
        }
        None => {
            let opt = match optimize_geometric(model.as_ref(), 2..=args.n_max) {
                Ok(o) => o,
                Err(Error::NoSolution) => {
                    doc.insert("N_opt".into(), Value::Null);
                    doc.insert("beta_opt".into(), Value::Null);
                    doc.insert("work_variance".into(), num(f64::INFINITY));
                    doc.insert("residual_eq17".into(), Value::Null);
                    return Ok(());
                }
                Err(e) => return Err(e.into()),
            };
            doc.insert("N_opt".into(), json!(opt.n_opt));
            doc.insert("beta_opt".into(), num(opt.beta_opt));
            doc.insert("work_variance".into(), num(opt.value));
            doc.insert("residual_eq17".into(), num(opt.residual_eq17));
            doc.insert("residual_integer".into(), num(opt.residual_integer));
            doc.insert(
                "continuous".into(),
                json!({
                    "N": num(opt.continuous.n),
                    "beta": num(opt.continuous.beta),
                    "work_variance": num(opt.continuous.value),
                }),
            );
            if let Some(p) = law.pareto {
                doc.insert("beta_opt_closed_form".into(), p.beta_opt(opt.n_opt).map_or(Value::Null, num));
            }
        }
    }
    let m = law.mean();
    let n_app_real = n_app(m);
    let n_app_int = (n_app_real.round() as usize).max(2);
    let beta = beta_app(n_app_int)?;
    doc.insert("n_app".into(), num(n_app_real));
    doc.insert("beta_app".into(), num(beta));
    doc.insert(
        "work_variance_app".into(),
        num(work_variance_geometric(model.as_ref(), beta, n_app_int as f64)),
    );
    Ok(())
}

fn optimal_fields(law: &Law, args: &OptimizeArgs, doc: &mut Map<String, Value>) -> Result<(), Failure> {
    doc.insert("mode".into(), json!("optimal-scheme"));
    let n = match args.n {
        Some(n) => n,
        None => match general_minimum(|n| law.optimal_work_variance(n), args.n_max)? {
            Some((n, _)) => n,
            None => {
                doc.insert("N_opt".into(), Value::Null);
                doc.insert("i0".into(), Value::Null);
                doc.insert("work_variance".into(), num(f64::INFINITY));
                doc.insert("residual_eq17".into(), Value::Null);
                return Ok(());
            }
        },
    };
    doc.insert("N_opt".into(), json!(n));
    doc.insert("residual_eq17".into(), Value::Null);
    let Some((q, opt)) = law.q_for_optimal(n)? else {
        doc.insert("i0".into(), Value::Null);
        doc.insert("work_variance".into(), num(f64::INFINITY));
        return Ok(());
    };
    let m = law.mean();
    let wv = work_variance(&opt.scheme, &q, m, n);
    doc.insert("i0".into(), json!(opt.i0));
    doc.insert("s0".into(), num(opt.s0));
    doc.insert("work_variance".into(), num(wv));
    let head: Vec<Value> = (0..q.values.len().min(21)).map(|i| num(opt.scheme.survival(i as u64))).collect();
    doc.insert("beta_head".into(), Value::Array(head));
    doc.insert("q_provenance".into(), serde_json::to_value(q.provenance).expect("provenance serializes"));
    let app = RandomizationScheme::geometric(beta_app(n)?)?;
    doc.insert("work_variance_geometric_app".into(), num(work_variance(&app, &q, m, n)));
    Ok(())
}

/// Minimum over N in 2..=n_max: a log-spaced scan, then every integer
/// between the neighbours of the best scan point.
fn general_minimum(
    eval: impl Fn(usize) -> Result<f64, Failure>,
    n_max: usize,
) -> Result<Option<(usize, f64)>, Failure> {
    const SCAN: usize = 64;
    let ratio = (n_max as f64 / 2.0).ln() / SCAN as f64;
    let mut grid: Vec<usize> = (0..=SCAN)
        .map(|k| ((2.0 * (ratio * k as f64).exp()).round() as usize).clamp(2, n_max))
        .collect();
    grid.dedup();
    let mut values = Vec::with_capacity(grid.len());
    for &n in &grid {
        values.push(eval(n)?);
    }
    let Some(best) = (0..grid.len())
        .filter(|&k| values[k].is_finite())
        .min_by(|&x, &y| values[x].total_cmp(&values[y]))
    else {
        return Ok(None);
    };
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let mut result = (grid[best], values[best]);
    for n in lo..=hi {
        let v = eval(n)?;
        if v < result.1 {
            result = (n, v);
        }
    }
    Ok(Some(result))
}

/// One tail index of the Pareto sweep. Work variances are per unit of cost.
#[derive(Debug, Serialize)]
struct SweepRow {
    #[serde(serialize_with = "real")]
    a: f64,
    #[serde(serialize_with = "real")]
    m: f64,
    n_opt_general: Option<usize>,
    #[serde(serialize_with = "real")]
    work_variance_general: f64,
    n_opt_geometric: Option<usize>,
    #[serde(serialize_with = "real")]
    beta_opt_geometric: f64,
    #[serde(serialize_with = "real")]
    work_variance_geometric: f64,
    #[serde(serialize_with = "real")]
    n_app: f64,
    #[serde(serialize_with = "real")]
    work_variance_app: f64,
    #[serde(serialize_with = "real")]
    work_variance_app_n2: f64,
    #[serde(serialize_with = "real")]
    work_variance_app_n5: f64,
    #[serde(serialize_with = "real")]
    work_variance_app_n10: f64,
    #[serde(serialize_with = "real")]
    work_variance_mc: f64,
    /// Limit of `N · var m̂` with each walk costing one draw.
    #[serde(serialize_with = "real")]
    work_variance_ideal: f64,
}

fn parse_sweep(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Usage(format!("--sweep expects a=<start>:<end>:<step>, got `{spec}`"));
    let range = spec.trim().strip_prefix("a=").ok_or_else(bad)?;
    let parts: Vec<f64> = range
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, end, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || !(end >= start) || !(start > 1.0) {
        return Err(Failure::Usage(format!(
            "--sweep needs 1 < start <= end and a positive step, got `{spec}`"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| ((start + step * k as f64) * 1e10).round() / 1e10)
        .collect())
}

fn sweep_rows(spec: &str, n_max: usize) -> Result<Vec<SweepRow>, Failure> {
    let mut rows = Vec::new();
    for a in parse_sweep(spec)? {
        let law = Law::parse(&format!("pareto:a={a}"))?;
        let oracle = law.pareto.expect("pareto law");
        let m = oracle.mean();
        let general = general_minimum(|n| law.optimal_work_variance(n), n_max)?;
        let geometric = match optimize_geometric(&oracle, 2..=n_max) {
            Ok(o) => Some(o),
            Err(Error::NoSolution) => None,
            Err(e) => return Err(e.into()),
        };
        let app_at = |n: usize| -> Result<f64, Failure> {
            Ok(work_variance_geometric(&oracle, beta_app(n)?, n as f64))
        };
        let n_app_real = n_app(m);
        let n_app_int = (n_app_real.round() as usize).max(2);
        rows.push(SweepRow {
            a,
            m,
            n_opt_general: general.map(|g| g.0),
            work_variance_general: general.map_or(f64::INFINITY, |g| g.1),
            n_opt_geometric: geometric.map(|g| g.n_opt),
            beta_opt_geometric: geometric.map_or(f64::NAN, |g| g.beta_opt),
            work_variance_geometric: geometric.map_or(f64::INFINITY, |g| g.value),
            n_app: n_app_real,
            work_variance_app: app_at(n_app_int)?,
            work_variance_app_n2: app_at(2)?,
            work_variance_app_n5: app_at(5)?,
            work_variance_app_n10: app_at(10)?,
            work_variance_mc: if a > 2.0 {
                m * (m - 1.0) * (m - 1.0) / (2.0 - m)
            } else {
                f64::INFINITY
            },
            work_variance_ideal: m * (m - 1.0) * (m - 1.0) / 2.0,
        });
    }
    Ok(rows)
}
