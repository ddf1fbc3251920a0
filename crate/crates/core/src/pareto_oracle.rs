//! Closed-form results for Pareto targets (`p_x = min(1, x^{-a})`): means,
//! variances of the competing estimators, the q-sequence and the optimal
//! parameters. Used as ground truth by the tests and the `oracle` command.

use serde::Serialize;

use crate::error::{check_n, Error, Result};
use crate::numeric::CompensatedSum;
use crate::randomize::{gamma_real, QProvenance, QSequence, VarianceModel};

/// Which constant to use for the extra `i = 0` term of the q-sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndicatorTerm {
    /// `(a+1)/(a-1)`: consistent with `Σ q_i − m² = var m̂` and with quadrature.
    #[default]
    Corrected,
    /// `(a+1)/(2(a-1))`, half the consistent value; kept for comparison only.
    Printed,
}

/// Variances of the crude Monte Carlo, ideal and importance-sampling
/// estimators with N samples. Infinite values are returned as `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Variances {
    pub mc: f64,
    pub ideal: f64,
    pub is: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParetoOracle {
    a: f64,
    m: f64,
}

impl ParetoOracle {
    pub fn new(a: f64) -> Result<Self> {
        Ok(Self { a, m: mean(a)? })
    }

    pub fn tail_index(&self) -> f64 {
        self.a
    }

    pub fn mean(&self) -> f64 {
        self.m
    }

    /// Variance of `m̂` with a real number of walks: `m(m−1)²/(2γ − m)`.
    pub fn ideal_variance_real(&self, gamma: f64) -> f64 {
        let m = self.m;
        if 2.0 * gamma > m {
            m * (m - 1.0) * (m - 1.0) / (2.0 * gamma - m)
        } else {
            f64::INFINITY
        }
    }

    /// `var_mc = m(m−1)²/((2−m)N)` (finite iff a > 2), `var_ideal` (finite iff
    /// a > 2N/(2N−1)) and, given the importance-sampling exponent b,
    /// `var_is = m²(B−1)²/(N(2B−1))` with `B = (a−1)/b` (finite iff a > 1 + b/2).
    pub fn variances(&self, n: usize, b: Option<f64>) -> Result<Variances> {
        check_n(n)?;
        let (m, nf) = (self.m, n as f64);
        let mc = if self.a > 2.0 {
            m * (m - 1.0) * (m - 1.0) / ((2.0 - m) * nf)
        } else {
            f64::INFINITY
        };
        let is = match b {
            None => None,
            Some(b) if !(b > 0.0) => {
                return Err(Error::InvalidParameter {
                    name: "b",
                    value: b,
                    reason: "importance-sampling exponent must be positive",
                })
            }
            Some(b) => {
                let big_b = (self.a - 1.0) / b;
                Some(if self.a > 1.0 + b / 2.0 {
                    m * m * (big_b - 1.0) * (big_b - 1.0) / (nf * (2.0 * big_b - 1.0))
                } else {
                    f64::INFINITY
                })
            }
        };
        Ok(Variances {
            mc,
            ideal: self.ideal_variance_real(nf),
            is,
        })
    }

    /// Common ratio `a(N−1)²/(N(aN−2))` of the q-sequence.
    pub fn q_ratio(&self, n: usize) -> f64 {
        let (a, nf) = (self.a, n as f64);
        a * (nf - 1.0) * (nf - 1.0) / (nf * (a * nf - 2.0))
    }

    fn q_scale(&self, n: usize) -> f64 {
        2.0 / ((self.a - 1.0) * (self.a * n as f64 - 2.0))
    }

    fn indicator(&self, term: IndicatorTerm) -> f64 {
        let base = (self.a + 1.0) / (self.a - 1.0);
        match term {
            IndicatorTerm::Corrected => base,
            IndicatorTerm::Printed => base / 2.0,
        }
    }

    /// `q_i = 2/((a−1)(aN−2)) · r^i + [i = 0](a+1)/(a−1)`.
    pub fn q_closed(&self, n: usize, i: usize) -> Result<f64> {
        self.q_closed_with(n, i, IndicatorTerm::Corrected)
    }

    pub fn q_closed_with(&self, n: usize, i: usize, term: IndicatorTerm) -> Result<f64> {
        check_n(n)?;
        let r = self.q_ratio(n);
        if !(r < 1.0) || self.a * n as f64 <= 2.0 {
            return Err(Error::InfiniteVariance);
        }
        let extra = if i == 0 { self.indicator(term) } else { 0.0 };
        Ok(self.q_scale(n) * r.powi(i as i32) + extra)
    }

    /// `q_0 .. q_{len-1}` as a [`QSequence`].
    pub fn q_sequence(&self, n: usize, len: usize) -> Result<QSequence> {
        let values = (0..len).map(|i| self.q_closed(n, i)).collect::<Result<Vec<_>>>()?;
        Ok(QSequence {
            n,
            values,
            provenance: QProvenance::ClosedFormPareto,
            tolerance: 0.0,
            mean: self.m,
        })
    }

    /// `Σ_{j≤i} q_j − m² = c(1 − r^{i+1})/(1 − r) − 1/(a−1)²`.
    fn partial_excess(&self, n: usize, i: usize) -> f64 {
        let r = self.q_ratio(n);
        let c = self.q_scale(n);
        c * (-((i + 1) as f64 * r.ln()).exp_m1()) / (1.0 - r) - 1.0 / ((self.a - 1.0) * (self.a - 1.0))
    }

    /// Exact `i0 = min{i : Σ_{j≤i} q_j − m² > (N+i) q_{i+1}}` and the
    /// asymptotic `(Nm/2)(log N + log log N − log(m/2))`.
    pub fn i0(&self, n: usize) -> Result<(usize, f64)> {
        check_n(n)?;
        let r = self.q_ratio(n);
        if !(r < 1.0) {
            return Err(Error::InfiniteVariance);
        }
        let c = self.q_scale(n);
        let mut i = 0usize;
        loop {
            let next = c * ((i + 1) as f64 * r.ln()).exp();
            if self.partial_excess(n, i) > (n + i) as f64 * next {
                break;
            }
            i += 1;
        }
        let (nf, m) = (n as f64, self.m);
        let asymptotic = nf * m / 2.0 * (nf.ln() + nf.ln().ln() - (m / 2.0).ln());
        Ok((i, asymptotic))
    }

    /// `var Ẑ = m(m−1)²/(2γ(β,N) − m)`, infinite when `2γ ≤ m`.
    pub fn var_z_geometric(&self, beta: f64, n: usize) -> Result<f64> {
        check_n(n)?;
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: beta,
                reason: "must be positive",
            });
        }
        Ok(self.ideal_variance_real(gamma_real(beta, n as f64)))
    }

    /// Geometric parameter minimizing `E[τ] · var Ẑ` at fixed N:
    /// `log(1/B₊ + 1)` with `B₊` the positive root of
    /// `((2N−m)/(N−1)²) B² − 2mB − (m(N−1)² + 2N²)`.
    pub fn beta_opt(&self, n: usize) -> Result<f64> {
        check_n(n)?;
        let (m, nf) = (self.m, n as f64);
        let k = (nf - 1.0) * (nf - 1.0);
        let qa = (2.0 * nf - m) / k;
        let qb = -2.0 * m;
        let qc = -(m * k + 2.0 * nf * nf);
        let disc = qb * qb - 4.0 * qa * qc;
        if !(qa > 0.0) || !(disc >= 0.0) {
            return Err(Error::Internal(format!("no positive root for a = {}, N = {n}", self.a)));
        }
        let root = (-qb + disc.sqrt()) / (2.0 * qa);
        if !(root > 0.0) {
            return Err(Error::Internal(format!("no positive root for a = {}, N = {n}", self.a)));
        }
        Ok((1.0 / root).ln_1p())
    }

    /// `(m(m−1)/2)² log N`, the growth of the optimal work-variance product.
    pub fn work_variance_asymptote(&self, n: f64) -> f64 {
        let h = self.m * (self.m - 1.0) / 2.0;
        h * h * n.ln()
    }

    /// `Σ_{i≥0} q_i` in closed form (corrected indicator).
    pub fn q_total(&self, n: usize) -> Result<f64> {
        let r = self.q_ratio(n);
        if !(r < 1.0) {
            return Err(Error::InfiniteVariance);
        }
        let mut acc = CompensatedSum::new();
        acc.add(self.q_scale(n) / (1.0 - r));
        acc.add(self.indicator(IndicatorTerm::Corrected));
        Ok(acc.value())
    }
}

impl VarianceModel for ParetoOracle {
    fn mean(&self) -> f64 {
        self.m
    }

    fn ideal_variance_at(&self, gamma: f64) -> f64 {
        self.ideal_variance_real(gamma)
    }
}

/// `m = a/(a−1)`.
pub fn mean(a: f64) -> Result<f64> {
    if !(a > 1.0) {
        return Err(Error::InfiniteMean(a));
    }
    if a.is_infinite() {
        return Ok(1.0);
    }
    Ok(a / (a - 1.0))
}

/// `max(m − 1 + sqrt(m² − m − 1), 2)`; a negative discriminant gives 2.
pub fn n_app(m: f64) -> f64 {
    let disc = m * m - m - 1.0;
    if disc < 0.0 {
        return 2.0;
    }
    (m - 1.0 + disc.sqrt()).max(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomize::{beta_app, optimal_scheme};

    fn oracle(a: f64) -> ParetoOracle {
        ParetoOracle::new(a).unwrap()
    }

    #[test]
    fn means() {
        assert_eq!(mean(2.0).unwrap(), 2.0);
        assert_eq!(mean(1.25).unwrap(), 5.0);
        assert_eq!(mean(f64::INFINITY).unwrap(), 1.0);
        assert!((mean(1e9).unwrap() - 1.0).abs() < 1e-8);
        assert_eq!(mean(1.0), Err(Error::InfiniteMean(1.0)));
    }

    #[test]
    fn variance_examples() {
        let v = oracle(3.0).variances(100, None).unwrap();
        assert!((v.mc - 0.0075).abs() < 1e-15);
        let v = oracle(2.0).variances(100, None).unwrap();
        assert_eq!(v.mc, f64::INFINITY);
        assert!((v.ideal - 2.0 / 198.0).abs() < 1e-15);
        let v = oracle(2.5).variances(10, Some(1.5)).unwrap();
        assert_eq!(v.is, Some(0.0));
        let v = oracle(1.2).variances(2, Some(1.0)).unwrap();
        assert_eq!(v.is, Some(f64::INFINITY));
    }

    #[test]
    fn q_closed_examples() {
        let o = oracle(2.0);
        assert!((o.q_closed(2, 0).unwrap() - 4.0).abs() < 1e-15);
        assert!((o.q_closed(2, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!((o.q_closed(2, 2).unwrap() - 0.25).abs() < 1e-15);
        assert!((o.q_ratio(2) - 0.5).abs() < 1e-15);
        assert!((o.q_closed_with(2, 0, IndicatorTerm::Printed).unwrap() - 2.5).abs() < 1e-15);
        assert!((o.q_total(2).unwrap() - 4.0 - 1.0).abs() < 1e-14);
        assert_eq!(oracle(1.05).q_closed(2, 0), Err(Error::InfiniteVariance));
    }

    #[test]
    fn sum_identity_matches_ideal_variance() {
        for &a in &[1.5, 2.0, 2.5, 4.0] {
            let o = oracle(a);
            for n in [2usize, 3, 10, 57] {
                let lhs = o.q_total(n).unwrap() - o.mean() * o.mean();
                let rhs = o.variances(n, None).unwrap().ideal;
                assert!((lhs / rhs - 1.0).abs() < 1e-10, "a={a} N={n}");
            }
        }
    }

    #[test]
    fn i0_small_case() {
        let (exact, _) = oracle(2.0).i0(2).unwrap();
        assert_eq!(exact, 2);
        let q = oracle(2.0).q_sequence(2, 30).unwrap();
        let s = optimal_scheme(&q, 2.0, 2).unwrap();
        assert_eq!(s.i0, 2);
    }

    #[test]
    fn i0_asymptotic_value() {
        let (_, asym) = oracle(2.0).i0(100).unwrap();
        let expect = 100.0 * (100f64.ln() + 100f64.ln().ln());
        assert!((asym - expect).abs() < 1e-9);
        assert!((asym - 613.2).abs() < 0.1);
    }

    #[test]
    fn var_z_at_beta_app() {
        let o = oracle(2.0);
        let v = o.var_z_geometric(beta_app(100).unwrap(), 100).unwrap();
        assert!((v - 2.0 / 99.0).abs() < 1e-13);
        let v = o.var_z_geometric(1e-15, 100).unwrap();
        assert!((v - 2.0 / 198.0).abs() < 1e-9);
        assert_eq!(o.var_z_geometric(5.0, 100).unwrap(), f64::INFINITY);
    }

    #[test]
    fn beta_opt_small_case() {
        let b = oracle(2.0).beta_opt(2).unwrap();
        let expect = (1.0 / (1.0 + 6f64.sqrt())).ln_1p();
        assert!((b - expect).abs() < 1e-14);
        assert!((b - 1.2899f64.ln()).abs() < 1e-5);
    }

    #[test]
    fn n_app_examples() {
        assert_eq!(n_app(2.0), 2.0);
        assert!((n_app(5.0) - (4.0 + 19f64.sqrt())).abs() < 1e-14);
        assert_eq!(n_app(1.2), 2.0);
    }

    #[test]
    fn asymptote_examples() {
        let o = oracle(2.0);
        assert!((o.work_variance_asymptote(std::f64::consts::E) - 1.0).abs() < 1e-15);
        assert!((o.work_variance_asymptote(100.0) - 100f64.ln()).abs() < 1e-15);
    }
}
