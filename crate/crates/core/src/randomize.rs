//! Truncation schemes for the randomized estimator: geometric schemes, the
//! q-sequence that drives the variance, the optimal survival sequence and the
//! joint search over the geometric parameter and the number of walks.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::distributions::TargetDistribution;
use crate::error::{check_n, Error, Result};
use crate::numeric::{self, CompensatedSum};
use crate::walk::SimRng;

/// `log(1 + 1/(N² − 1))`, the geometric parameter for which `E[T] = N² − 1`.
pub fn beta_app(n: usize) -> Result<f64> {
    check_n(n)?;
    let n = n as f64;
    Ok((1.0 / (n * n - 1.0)).ln_1p())
}

/// Effective number of walks of a geometrically truncated estimator:
/// `N / (1 + (e^β − 1)(N − 1)²)`.
pub fn gamma(beta: f64, n: usize) -> Result<f64> {
    check_n(n)?;
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
            reason: "must be positive",
        });
    }
    Ok(gamma_real(beta, n as f64))
}

/// [`gamma`] for a real number of walks, used by the continuous relaxation.
pub fn gamma_real(beta: f64, n: f64) -> f64 {
    n / (1.0 + beta.exp_m1() * (n - 1.0) * (n - 1.0))
}

/// Geometric parameter satisfying the joint stationarity relation between
/// the optimal parameter and the optimal (real) number of walks.
pub fn stationary_beta(n: f64) -> f64 {
    let denom = n * n - 1.0 + (n - 1.0) * (n * n + 6.0 * n + 1.0).sqrt();
    (2.0 / denom).ln_1p()
}

/// Survival sequence `β_i = P(T ≥ i)` of the truncation index.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RandomizationScheme {
    Geometric { beta: f64 },
    /// Explicit table `β_0 .. β_{L-1}` continued by `β_{L-1} ρ^{i-L+1}`.
    Explicit { table: Vec<f64>, tail_ratio: f64 },
}

impl RandomizationScheme {
    pub fn geometric(beta: f64) -> Result<Self> {
        let s = RandomizationScheme::Geometric { beta };
        s.validate()?;
        Ok(s)
    }

    pub fn explicit(table: Vec<f64>, tail_ratio: f64) -> Result<Self> {
        let s = RandomizationScheme::Explicit { table, tail_ratio };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RandomizationScheme::Geometric { beta } => {
                if !(*beta > 0.0) || !beta.is_finite() {
                    return Err(Error::InvalidScheme(format!("geometric parameter {beta} must be positive")));
                }
            }
            RandomizationScheme::Explicit { table, tail_ratio } => {
                if table.first() != Some(&1.0) {
                    return Err(Error::InvalidScheme("β_0 must equal 1".into()));
                }
                if let Some(i) = (1..table.len()).find(|&i| !(table[i] > 0.0 && table[i] <= table[i - 1])) {
                    return Err(Error::InvalidScheme(format!("β_{i} breaks 0 < β_i ≤ β_(i-1)")));
                }
                if !(*tail_ratio > 0.0 && *tail_ratio < 1.0) {
                    return Err(Error::InvalidScheme(format!("tail ratio {tail_ratio} must lie in (0, 1)")));
                }
            }
        }
        Ok(())
    }

    /// `β_i`.
    pub fn survival(&self, i: u64) -> f64 {
        self.log_survival(i).exp()
    }

    pub fn log_survival(&self, i: u64) -> f64 {
        match self {
            RandomizationScheme::Geometric { beta } => -beta * i as f64,
            RandomizationScheme::Explicit { table, tail_ratio } => {
                let last = table.len() as u64 - 1;
                if i <= last {
                    table[i as usize].ln()
                } else {
                    table[last as usize].ln() + (i - last) as f64 * tail_ratio.ln()
                }
            }
        }
    }

    /// `E[T] = Σ_{i≥1} β_i`.
    pub fn expected_truncation(&self) -> f64 {
        match self {
            RandomizationScheme::Geometric { beta } => 1.0 / beta.exp_m1(),
            RandomizationScheme::Explicit { table, tail_ratio } => {
                let head: CompensatedSum = table[1..].iter().copied().collect();
                head.value() + table[table.len() - 1] * tail_ratio / (1.0 - tail_ratio)
            }
        }
    }

    /// Draws T by inversion: `T = max{i : U ≤ β_i}` with `U` uniform on (0, 1].
    pub fn sample(&self, rng: &mut SimRng) -> u64 {
        let u: f64 = 1.0 - rng.random::<f64>();
        let log_u = u.ln();
        match self {
            RandomizationScheme::Geometric { beta } => (-log_u / beta).floor() as u64,
            RandomizationScheme::Explicit { table, tail_ratio } => {
                let mut i = 0;
                while i + 1 < table.len() && table[i + 1] >= u {
                    i += 1;
                }
                if i + 1 < table.len() {
                    return i as u64;
                }
                let last = table[i];
                let extra = ((log_u - last.ln()) / tail_ratio.ln()).floor();
                i as u64 + extra.max(0.0) as u64
            }
        }
    }

    /// Short textual description, e.g. `geom:beta=0.01`.
    pub fn label(&self) -> String {
        match self {
            RandomizationScheme::Geometric { beta } => format!("geom:beta={beta}"),
            RandomizationScheme::Explicit { table, tail_ratio } => {
                format!("explicit:len={},tail={tail_ratio}", table.len())
            }
        }
    }
}

/// Where a q-sequence came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QProvenance {
    ClosedFormPareto,
    NumericalQuadrature,
}

/// Coefficients `q_{0,N}, q_{1,N}, …` whose `1/β_i`-weighted sum minus `m²`
/// is the variance of the randomized estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QSequence {
    pub n: usize,
    pub values: Vec<f64>,
    pub provenance: QProvenance,
    pub tolerance: f64,
    /// Mean of the target, `m`.
    pub mean: f64,
}

impl QSequence {
    /// Ratio of the last two coefficients, used to continue the sequence.
    pub fn tail_ratio(&self) -> f64 {
        let k = self.values.len();
        if k < 3 {
            return f64::NAN;
        }
        self.values[k - 1] / self.values[k - 2]
    }

    /// `Σ_i q_i` with a geometric continuation past the last stored value.
    pub fn total(&self) -> f64 {
        let head: CompensatedSum = self.values.iter().copied().collect();
        let r = self.tail_ratio();
        let last = *self.values.last().unwrap_or(&0.0);
        if !(r < 1.0) {
            return f64::INFINITY;
        }
        head.value() + last * r / (1.0 - r)
    }

    /// `var m̂ = Σ_i q_i − m²`.
    pub fn ideal_variance(&self) -> f64 {
        self.total() - self.mean * self.mean
    }

    /// `Δ_i = Σ_{j≤i} q_j − m² − (N + i) q_{i+1}` for every available i.
    pub fn deltas(&self) -> Vec<f64> {
        let m2 = self.mean * self.mean;
        let mut acc = CompensatedSum::new();
        let mut out = Vec::with_capacity(self.values.len().saturating_sub(1));
        for i in 0..self.values.len().saturating_sub(1) {
            acc.add(self.values[i]);
            out.push(acc.value() - m2 - (self.n + i) as f64 * self.values[i + 1]);
        }
        out
    }
}

/// Variance of the ideal estimator as a function of a real number of walks.
/// Geometric truncation with parameter β acts like the ideal estimator with
/// `γ(β, N)` walks.
pub trait VarianceModel: Sync {
    fn mean(&self) -> f64;

    /// `var m̂(γ)`, or infinity.
    fn ideal_variance_at(&self, gamma: f64) -> f64;
}

/// A q-sequence computed with two walks gives `var m̂(γ) = Σ q_{i,2}(2/γ)^i − m²`.
impl VarianceModel for QSequence {
    fn mean(&self) -> f64 {
        self.mean
    }

    fn ideal_variance_at(&self, gamma: f64) -> f64 {
        assert_eq!(self.n, 2, "the γ-expansion uses the two-walk q-sequence");
        let z = 2.0 / gamma;
        let r = self.tail_ratio() * z;
        if !(r < 1.0) {
            return f64::INFINITY;
        }
        let mut acc = CompensatedSum::new();
        let mut w = 1.0;
        for &q in &self.values {
            acc.add(q * w);
            w *= z;
        }
        let last = self.values[self.values.len() - 1] * w / z;
        let v = acc.value() + last * r / (1.0 - r) - self.mean * self.mean;
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }
}

/// Numerical q-sequence for an analytic distribution with a density.
///
/// With `T ~ Gamma(i+1, N)` the Poisson time of the (i+1)-th event,
/// `q_i = (2/N)(1 − 1/N)^{2i} E[ℛ(X_{i+1})]` where `ℛ(x) = R(x)/f(x)` and
/// `R(x) = ∫_x^∞ p`. The region below the left endpoint adds
/// `x_L² + 2 x_L R(x_L)` to `q_0`.
pub fn q_sequence_numeric(dist: &dyn TargetDistribution, n: usize, i_max: usize, tol: f64) -> Result<QSequence> {
    check_n(n)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "must be positive",
        });
    }
    if dist.density(dist.left_endpoint()).is_none() {
        return Err(Error::InvalidParameter {
            name: "density",
            value: f64::NAN,
            reason: "q-sequence quadrature needs a density",
        });
    }
    let inner_tol = (tol * 1e-2).max(1e-14);
    let x_l = dist.left_endpoint();
    let r_left = dist.integrated_survival(x_l, inner_tol);
    let mean = x_l + r_left;
    let nf = n as f64;

    let ratio_at = |t: f64| -> f64 {
        let x = dist.inverse_log_survival(-t);
        let f = dist.density(x).unwrap_or(0.0);
        if !(f > 0.0) {
            return 0.0;
        }
        dist.integrated_survival(x, inner_tol) / f
    };

    let results: Vec<(f64, f64)> = (0..=i_max)
        .into_par_iter()
        .map(|i| {
            let k = (i + 1) as f64;
            let ln_norm = k * nf.ln() - ln_gamma(k);
            let integrand = |t: f64| {
                if t <= 0.0 {
                    return 0.0;
                }
                let r = ratio_at(t);
                if r <= 0.0 {
                    return 0.0;
                }
                let v = (ln_norm + (k - 1.0) * t.ln() - nf * t + r.ln()).exp();
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            };
            // Window around the mode of the integrand (the Gamma weight tilted
            // by ℛ), located on a log grid and sized by its curvature.
            let log_f = |t: f64| {
                let v = integrand(t);
                if v > 0.0 {
                    v.ln()
                } else {
                    f64::NEG_INFINITY
                }
            };
            let mu = k / nf;
            let grid: Vec<f64> = (0..=400).map(|j| mu * (2f64).powf(-10.0 + 0.05 * j as f64)).collect();
            let mode = grid
                .iter()
                .copied()
                .max_by(|a, b| log_f(*a).total_cmp(&log_f(*b)))
                .unwrap_or(mu);
            let h = 1e-3 * mode;
            let curvature = -(log_f(mode + h) - 2.0 * log_f(mode) + log_f(mode - h)) / (h * h);
            let width = if curvature.is_finite() && curvature > 0.0 {
                1.0 / curvature.sqrt()
            } else {
                k.sqrt() / nf
            };
            let lo = (mode - 12.0 * width).max(0.0);
            let hi = mode + 12.0 * width;
            // Outside the window the integrand is negligible, so the side
            // panels only need an absolute accuracy relative to the centre.
            let centre = numeric::integrate(integrand, lo, hi, tol);
            let side = tol * centre.value.abs() * 0.25;
            let panels = [
                numeric::integrate_abs(integrand, 0.0, lo, side),
                centre,
                numeric::integrate_to_infinity_abs(integrand, hi, side),
            ];
            let value: f64 = panels.iter().map(|p| p.value).sum();
            let error: f64 = panels.iter().map(|p| p.error).sum();
            let weight = 2.0 / nf * (2.0 * i as f64 * (-1.0 / nf).ln_1p()).exp();
            let mut q = weight * value;
            if i == 0 {
                q += x_l * x_l + 2.0 * x_l * r_left;
            }
            let rel = if value > 0.0 { error / value } else { f64::INFINITY };
            (q, rel)
        })
        .collect();

    let values: Vec<f64> = results.iter().map(|r| r.0).collect();
    if let Some(index) = results.iter().position(|r| !(r.1 <= tol)) {
        return Err(Error::ToleranceNotMet {
            index,
            tol,
            achieved: results[index].1,
            partial: values,
        });
    }
    let q = QSequence {
        n,
        values,
        provenance: QProvenance::NumericalQuadrature,
        tolerance: tol,
        mean,
    };
    let var = q.ideal_variance();
    if var.is_finite() && !(var > 0.0) {
        return Err(Error::Internal(format!("Σ q_i − m² = {var} is not positive")));
    }
    Ok(q)
}

/// Result of the optimal-scheme construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalScheme {
    pub i0: usize,
    /// `Σ_{j≤i0} q_j − m²`.
    pub s0: f64,
    pub scheme: RandomizationScheme,
}

/// Survival sequence minimizing `E[τ] · var Ẑ` for a fixed N: `β_i = 1` up to
/// `i0 = min{i : Δ_i > 0}` and `β_i ∝ sqrt(q_i)` beyond.
pub fn optimal_scheme(q: &QSequence, m: f64, n: usize) -> Result<OptimalScheme> {
    check_n(n)?;
    if q.n != n {
        return Err(Error::InvalidParameter {
            name: "N",
            value: n as f64,
            reason: "q-sequence was computed for another N",
        });
    }
    if let Some(i) = (2..q.values.len()).find(|&i| !(q.values[i] < q.values[i - 1])) {
        return Err(Error::NonMonotoneQ(i));
    }
    let m2 = m * m;
    let mut acc = CompensatedSum::new();
    let mut found = None;
    for i in 0..q.values.len().saturating_sub(1) {
        acc.add(q.values[i]);
        let s = acc.value() - m2;
        if s > (n + i) as f64 * q.values[i + 1] {
            found = Some((i, s));
            break;
        }
    }
    let (i0, s0) = found.ok_or(Error::ExtendQSequence(q.values.len()))?;
    let scale = ((n + i0) as f64 / s0).sqrt();
    let mut table = vec![1.0; i0 + 1];
    table.extend(q.values[i0 + 1..].iter().map(|&qi| scale * qi.sqrt()));
    let tail_ratio = q.tail_ratio().sqrt();
    let scheme = RandomizationScheme::explicit(table, tail_ratio)?;
    Ok(OptimalScheme { i0, s0, scheme })
}

/// `E[τ] · var Ẑ = (N − 1 + Σ β_i)(Σ q_i/β_i − m²)`; infinite when the series
/// diverges or when the scheme never truncates.
pub fn work_variance(scheme: &RandomizationScheme, q: &QSequence, m: f64, n: usize) -> f64 {
    let cost = n as f64 + scheme.expected_truncation();
    let len = q.values.len();
    let mut acc = CompensatedSum::new();
    for (i, &qi) in q.values.iter().enumerate() {
        acc.add(qi / scheme.survival(i as u64));
    }
    // Continue both sequences geometrically.
    let rq = q.tail_ratio();
    let table_end = match scheme {
        RandomizationScheme::Geometric { .. } => 0,
        RandomizationScheme::Explicit { table, .. } => table.len(),
    };
    let mut term_q = q.values[len - 1];
    let mut i = len;
    while i < table_end {
        term_q *= rq;
        acc.add(term_q / scheme.survival(i as u64));
        i += 1;
    }
    let rb = (scheme.log_survival(i as u64 + 1) - scheme.log_survival(i as u64)).exp();
    let ratio = rq / rb;
    if !(ratio < 1.0) {
        return f64::INFINITY;
    }
    let next = term_q * rq / scheme.survival(i as u64);
    acc.add(next / (1.0 - ratio));
    let variance = acc.value() - m * m;
    if !cost.is_finite() || !variance.is_finite() {
        return f64::INFINITY;
    }
    cost * variance
}

/// Closed form of the work-variance product for a geometric scheme:
/// `(N + 1/(e^β − 1)) · var m̂(γ(β, N))`, with real N allowed.
pub fn work_variance_geometric(model: &dyn VarianceModel, beta: f64, n: f64) -> f64 {
    let v = model.ideal_variance_at(gamma_real(beta, n));
    if !v.is_finite() || v < 0.0 {
        return f64::INFINITY;
    }
    (n + 1.0 / beta.exp_m1()) * v
}

/// Best geometric parameter for a given (real) N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaOptimum {
    pub n: f64,
    pub beta: f64,
    pub value: f64,
}

const LOG_BETA_GRID: (f64, f64, usize) = (-46.0, 6.0, 209);

/// Minimizes the work-variance product over β for a fixed N: coarse scan in
/// log β followed by golden-section refinement around the best grid point.
pub fn minimize_beta(model: &dyn VarianceModel, n: f64) -> Option<BetaOptimum> {
    let objective = |log_beta: f64| work_variance_geometric(model, log_beta.exp(), n);
    let (lo, hi, count) = LOG_BETA_GRID;
    let step = (hi - lo) / (count - 1) as f64;
    let mut best = (f64::INFINITY, 0);
    for k in 0..count {
        let v = objective(lo + step * k as f64);
        if v < best.0 {
            best = (v, k);
        }
    }
    if !best.0.is_finite() {
        return None;
    }
    let center = lo + step * best.1 as f64;
    let (x, value) = numeric::golden_section_min(objective, center - step, center + step, 1e-15);
    Some(BetaOptimum {
        n,
        beta: x.exp(),
        value,
    })
}

/// Outcome of the joint search over `(β, N)` for geometric schemes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometricOptimum {
    /// Best integer number of walks in the search range.
    pub n_opt: usize,
    pub beta_opt: f64,
    pub value: f64,
    /// Relative gap between `beta_opt` and the stationarity relation at `n_opt`.
    /// Nonzero when the optimum sits on the boundary of the integer range.
    pub residual_integer: f64,
    /// Minimizer with N relaxed to a real number greater than one.
    pub continuous: BetaOptimum,
    /// Relative gap between the relaxed minimizer and the stationarity relation.
    pub residual_eq17: f64,
}

/// Scans integer N over `n_range` (parallel over candidates), then refines
/// the optimum over real `N > 1`.
pub fn optimize_geometric(model: &dyn VarianceModel, n_range: std::ops::RangeInclusive<usize>) -> Result<GeometricOptimum> {
    let (start, end) = (*n_range.start().max(&2), *n_range.end());
    let per_n: Vec<Option<BetaOptimum>> = (start..=end).into_par_iter().map(|n| minimize_beta(model, n as f64)).collect();
    let best = per_n
        .iter()
        .flatten()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .copied()
        .ok_or(Error::NoSolution)?;
    let n_opt = best.n as usize;

    // Relaxation: minimize over y = ln(N - 1).
    let profile = |y: f64| minimize_beta(model, 1.0 + y.exp()).map_or(f64::INFINITY, |o| o.value);
    let (y_lo, y_hi) = (-12.0, ((2 * end) as f64).ln());
    let count = 241;
    let step = (y_hi - y_lo) / (count - 1) as f64;
    let mut grid_best = (f64::INFINITY, 0);
    for k in 0..count {
        let v = profile(y_lo + step * k as f64);
        if v < grid_best.0 {
            grid_best = (v, k);
        }
    }
    let center = y_lo + step * grid_best.1 as f64;
    let (y, _) = numeric::golden_section_min(profile, center - step, center + step, 1e-15);
    let continuous = minimize_beta(model, 1.0 + y.exp()).ok_or(Error::NoSolution)?;

    let residual = |o: &BetaOptimum| ((o.beta - stationary_beta(o.n)) / o.beta).abs();
    Ok(GeometricOptimum {
        n_opt,
        beta_opt: best.beta,
        value: best.value,
        residual_integer: residual(&best),
        continuous,
        residual_eq17: residual(&continuous),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn beta_app_values() {
        assert!((beta_app(2).unwrap() - (4.0f64 / 3.0).ln()).abs() < 1e-15);
        assert!((beta_app(10).unwrap() - (100.0f64 / 99.0).ln()).abs() < 1e-15);
        assert_eq!(beta_app(1), Err(Error::InvalidN(1)));
    }

    #[test]
    fn gamma_at_beta_app_is_half_n_plus_half() {
        for n in 2..=100 {
            let g = gamma(beta_app(n).unwrap(), n).unwrap();
            assert!((g - (n as f64 + 1.0) / 2.0).abs() < 1e-12 * n as f64, "N={n}");
        }
    }

    #[test]
    fn gamma_examples() {
        assert!((gamma(2f64.ln(), 2).unwrap() - 1.0).abs() < 1e-15);
        assert!((gamma(1e-14, 7).unwrap() - 7.0).abs() < 1e-9);
        assert!((gamma(beta_app(5).unwrap(), 5).unwrap() - 3.0).abs() < 1e-13);
        assert!(gamma(0.0, 5).is_err());
    }

    #[test]
    fn explicit_scheme_validation() {
        assert!(RandomizationScheme::explicit(vec![1.0, 0.5], 0.5).is_ok());
        assert!(RandomizationScheme::explicit(vec![0.9, 0.5], 0.5).is_err());
        assert!(RandomizationScheme::explicit(vec![1.0, 0.5, 0.6], 0.5).is_err());
        assert!(RandomizationScheme::explicit(vec![1.0], 1.0).is_err());
        assert!(RandomizationScheme::geometric(-1.0).is_err());
    }

    #[test]
    fn explicit_survival_continues_geometrically() {
        let s = RandomizationScheme::explicit(vec![1.0, 1.0, 0.5], 0.25).unwrap();
        assert_eq!(s.survival(2), 0.5);
        assert!((s.survival(4) - 0.5 / 16.0).abs() < 1e-15);
        assert!((s.expected_truncation() - (1.0 + 0.5 + 0.5 * 0.25 / 0.75)).abs() < 1e-15);
    }

    #[test]
    fn sampled_survival_matches_explicit_table() {
        let s = RandomizationScheme::explicit(vec![1.0, 0.9, 0.5, 0.3], 0.5).unwrap();
        let mut rng = SimRng::seed_from_u64(5);
        let n = 200_000;
        let draws: Vec<u64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        for i in 0..8u64 {
            let p = s.survival(i);
            let emp = draws.iter().filter(|&&t| t >= i).count() as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt().max(1e-12);
            assert!((emp - p).abs() <= 4.0 * se + 1e-12, "i={i} emp={emp} p={p}");
        }
    }

    #[test]
    fn stationary_beta_solves_the_quadratic() {
        for &n in &[1.5, 2.0, 7.3, 100.0] {
            let b = 1.0 / stationary_beta(n).exp_m1();
            let resid = b * b - (n * n - 1.0) * b - n * (n - 1.0) * (n - 1.0);
            assert!(resid.abs() < 1e-8 * b * b, "n={n}");
        }
    }

    #[test]
    fn work_variance_without_truncation_is_infinite() {
        let q = QSequence {
            n: 2,
            values: vec![4.0, 0.5, 0.25, 0.125],
            provenance: QProvenance::ClosedFormPareto,
            tolerance: 0.0,
            mean: 2.0,
        };
        // β = 0 is the no-truncation limit: β_i ≡ 1 and E[T] = ∞.
        let s = RandomizationScheme::Geometric { beta: 0.0 };
        assert_eq!(work_variance(&s, &q, 2.0, 2), f64::INFINITY);
    }

    #[test]
    fn exponential_q_sequence_is_positive_and_decreasing() {
        let e = crate::distributions::Exponential::new(1.0).unwrap();
        let q = q_sequence_numeric(&e, 5, 12, 1e-8).unwrap();
        assert!(q.values.iter().all(|&v| v > 0.0));
        assert!(q.values.windows(2).all(|w| w[1] < w[0]));
        // For Exp(1), ℛ ≡ 1 so q_i = (2/N)(1-1/N)^{2i} and var m̂ = 1/(2N-1).
        let var = q.ideal_variance();
        assert!((var - 1.0 / 9.0).abs() < 1e-7, "{var}");
    }

    #[test]
    fn deltas_increase() {
        let e = crate::distributions::Exponential::new(1.0).unwrap();
        let q = q_sequence_numeric(&e, 4, 30, 1e-8).unwrap();
        let d = q.deltas();
        assert!(d.windows(2).all(|w| w[1] > w[0]));
    }
}
