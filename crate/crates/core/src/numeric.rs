//! Small numerical helpers: compensated summation, adaptive quadrature on top
//! of the double-exponential rule, and golden-section minimization.

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

impl Integral {
    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            self.error
        } else {
            self.error / self.value.abs()
        }
    }
}

const MAX_DEPTH: u32 = 40;
const MAX_PANELS: u32 = 4096;

/// Integrates `f` over `[a, b]` to the requested relative tolerance, bisecting
/// whenever a panel's double-exponential estimate misses its share of the budget.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Integral {
    if a == b {
        return Integral { value: 0.0, error: 0.0 };
    }
    let coarse = quadrature::integrate(&f, a, b, 1e-300);
    let scale = coarse.integral.abs().max(f64::MIN_POSITIVE);
    integrate_abs(f, a, b, rel_tol * scale)
}

/// [`integrate`] with an absolute error target, for panels whose value is
/// negligible next to a known total.
pub fn integrate_abs<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, target: f64) -> Integral {
    if a == b {
        return Integral { value: 0.0, error: 0.0 };
    }
    let mut state = Refinement::default();
    refine(&f, a, b, target, 0, &mut state);
    Integral {
        value: state.value.value(),
        error: state.error,
    }
}

#[derive(Default)]
struct Refinement {
    value: CompensatedSum,
    error: f64,
    panels: u32,
}

fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    target: f64,
    depth: u32,
    state: &mut Refinement,
) {
    let out = quadrature::integrate(f, a, b, target);
    state.panels += 1;
    if out.error_estimate <= target || depth >= MAX_DEPTH || state.panels >= MAX_PANELS {
        state.value.add(out.integral);
        state.error += out.error_estimate;
        return;
    }
    let mid = 0.5 * (a + b);
    refine(f, a, mid, 0.5 * target, depth + 1, state);
    refine(f, mid, b, 0.5 * target, depth + 1, state);
}

fn compactified<F: Fn(f64) -> f64>(f: F, a: f64, scale: f64) -> impl Fn(f64) -> f64 {
    move |s| {
        if s >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - s;
        let v = scale * f(a + scale * s / w) / (w * w);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    }
}

/// [`integrate_to_infinity`] with an absolute error target.
pub fn integrate_to_infinity_abs<F: Fn(f64) -> f64>(f: F, a: f64, target: f64) -> Integral {
    integrate_abs(compactified(f, a, 1.0), 0.0, 1.0, target)
}

/// Integrates `f` over `[a, ∞)` through the map `x = a + s / (1 - s)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, rel_tol: f64) -> Integral {
    integrate_to_infinity_scaled(f, a, 1.0, rel_tol)
}

/// [`integrate_to_infinity`] with `x = a + scale · s / (1 - s)`; `scale`
/// should be the length over which `f` decays.
pub fn integrate_to_infinity_scaled<F: Fn(f64) -> f64>(f: F, a: f64, scale: f64, rel_tol: f64) -> Integral {
    integrate(compactified(f, a, scale), 0.0, 1.0, rel_tol)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimizer of a unimodal `f` on `[lo, hi]`.
/// Infinite values are treated as larger than any finite value.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    while (hi - lo).abs() > tol * (1.0 + lo.abs().max(hi.abs())) && iterations < 500 {
        if less(f1, f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        iterations += 1;
    }
    if less(f1, f2) {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn less(a: f64, b: f64) -> bool {
    match (a.is_nan(), b.is_nan()) {
        (true, _) => false,
        (false, true) => true,
        _ => a < b,
    }
}

/// Sample mean and unbiased variance, accumulated in index order.
pub fn mean_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().copied().collect::<CompensatedSum>().value() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .collect::<CompensatedSum>()
        .value();
    (mean, ss / (n - 1) as f64)
}

/// Median of a sample (average of the two central order statistics for even sizes).
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::new();
        acc.add(1e16);
        for _ in 0..1000 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.value(), 1000.0);
    }

    #[test]
    fn integrates_peaked_gamma_density() {
        // Gamma(shape 401, rate 10) integrates to one.
        let k = 400.0_f64;
        let ln_norm = 401.0 * 10.0_f64.ln() - statrs::function::gamma::ln_gamma(401.0);
        let f = |t: f64| if t <= 0.0 { 0.0 } else { (ln_norm + k * t.ln() - 10.0 * t).exp() };
        let out = integrate_to_infinity(f, 0.0, 1e-10);
        assert!((out.value - 1.0).abs() < 1e-9, "{out:?}");
    }

    #[test]
    fn integrates_slow_power_tail() {
        let out = integrate_to_infinity(|x| x.powf(-2.0), 1.0, 1e-10);
        assert!((out.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (x, fx) = golden_section_min(|x| (x - 1.25).powi(2) + 3.0, -10.0, 10.0, 1e-12);
        assert!((x - 1.25).abs() < 1e-6);
        assert!((fx - 3.0).abs() < 1e-12);
    }

    #[test]
    fn golden_section_treats_infinity_as_large() {
        let f = |x: f64| if x > 2.0 { f64::INFINITY } else { (x - 1.0).powi(2) };
        let (x, _) = golden_section_min(f, 0.0, 5.0, 1e-12);
        assert!((x - 1.0).abs() < 1e-6);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [1.0, 10.0, 100.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        assert!((log_log_slope(&xs, &ys) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn mean_variance_small_sample() {
        let (m, v) = mean_variance(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
    }
}
