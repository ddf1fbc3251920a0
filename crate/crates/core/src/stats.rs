//! Goodness-of-fit and interval checks used by the tests and the self-test.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// One-sample Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

/// KS test of `sample` against the continuous cdf `cdf`.
pub fn ks_test<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> KsOutcome {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i as f64 + 1.0) / n - f);
    }
    KsOutcome {
        statistic: d,
        p_value: kolmogorov_p_value(d, sorted.len()),
    }
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsOutcome {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = (na * nb / (na + nb)).round() as usize;
    KsOutcome {
        statistic: d,
        p_value: kolmogorov_p_value(d, n_eff.max(1)),
    }
}

/// Asymptotic p-value with the Stephens small-sample correction.
pub fn kolmogorov_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Two-sided interval for the variance: `true_variance` is accepted when
/// `(n-1) s² / σ²` lies within the central `level` mass of χ²(n-1).
pub fn variance_in_chi_square_interval(sample_variance: f64, n: usize, true_variance: f64, level: f64) -> bool {
    let (lo, hi) = chi_square_variance_interval(sample_variance, n, level);
    lo <= true_variance && true_variance <= hi
}

/// Confidence interval for σ² given a sample variance over `n` values.
pub fn chi_square_variance_interval(sample_variance: f64, n: usize, level: f64) -> (f64, f64) {
    let df = (n - 1) as f64;
    let chi = ChiSquared::new(df).expect("positive degrees of freedom");
    let alpha = 1.0 - level;
    let lo_q = chi.inverse_cdf(alpha / 2.0);
    let hi_q = chi.inverse_cdf(1.0 - alpha / 2.0);
    (df * sample_variance / hi_q, df * sample_variance / lo_q)
}

/// True when `mean` is within `k` standard errors of `target`.
pub fn within_stderr(mean: f64, stderr: f64, target: f64, k: f64) -> bool {
    (mean - target).abs() <= k * stderr
}
