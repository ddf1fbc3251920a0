//! Scalar target variables: analytic families with closed-form inverse
//! survival functions, black-box integrands `X = g(U)`, and the signed split.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric;

/// Log-survival below which a level is treated as the end of the support.
pub const LOG_SURVIVAL_FLOOR: f64 = -690.775_527_898_213_7; // ln(1e-300)

/// How conditional draws above a level are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionalMode {
    ExactInverse,
    McmcBlackbox,
}

/// Law of a real random variable with continuous cdf, described through its
/// survival function `p_x = P(X > x)`.
pub trait TargetDistribution: fmt::Debug + Send + Sync {
    fn name(&self) -> String;

    /// Smallest point of the support.
    fn left_endpoint(&self) -> f64;

    fn log_survival(&self, x: f64) -> f64;

    fn survival(&self, x: f64) -> f64 {
        self.log_survival(x).exp()
    }

    /// Generalized inverse of the log-survival: the level whose log-survival
    /// equals `log_p` (with `log_p <= 0`).
    fn inverse_log_survival(&self, log_p: f64) -> f64;

    /// Quantile function of the cdf.
    fn quantile(&self, q: f64) -> f64 {
        self.inverse_log_survival((-q).ln_1p())
    }

    fn density(&self, x: f64) -> Option<f64>;

    fn mean(&self) -> Result<f64>;

    fn conditional_mode(&self) -> ConditionalMode {
        ConditionalMode::ExactInverse
    }

    /// Finite right endpoint. Walks on such laws stop once the survival
    /// drops below `1e-300`; unbounded laws are followed as deep as the
    /// inverse survival allows.
    fn bounded_above(&self) -> bool {
        false
    }

    /// Whether a conditional draw above `level` is still meaningful.
    fn exhausted_at(&self, level: f64) -> bool {
        let log_p = self.log_survival(level);
        log_p == f64::NEG_INFINITY || (self.bounded_above() && log_p < LOG_SURVIVAL_FLOOR)
    }

    /// `R(x) = ∫_x^∞ p_u du`, computed by quadrature of the survival function.
    fn integrated_survival(&self, x: f64, rel_tol: f64) -> f64 {
        let x = x.max(self.left_endpoint());
        // Map onto the distance over which the survival drops by a factor e.
        let scale = self.inverse_log_survival(self.log_survival(x) - 1.0) - x;
        let scale = if scale.is_finite() && scale > 0.0 { scale } else { 1.0 };
        numeric::integrate_to_infinity_scaled(|u| self.survival(u), x, scale, rel_tol).value
    }
}

/// Draws from `X | X > level` by scaling the survival: `x* = p⁻¹(p_level · u)`.
pub fn conditional_sample_exact(dist: &dyn TargetDistribution, level: f64, u: f64) -> Result<f64> {
    if dist.conditional_mode() != ConditionalMode::ExactInverse {
        return Err(Error::InvalidParameter {
            name: "conditional_mode",
            value: f64::NAN,
            reason: "distribution has no closed-form inverse survival",
        });
    }
    let log_p = dist.log_survival(level);
    if log_p == f64::NEG_INFINITY || log_p.is_nan() {
        return Err(Error::ExhaustedSupport { level });
    }
    let x = dist.inverse_log_survival(log_p + u.ln());
    if x > level {
        Ok(x)
    } else if u >= 1.0 {
        // u = 1 maps back onto the level itself; nudge to the next float.
        Ok(next_up(level))
    } else {
        Err(Error::ExhaustedSupport { level })
    }
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        f64::from_bits(1)
    } else if x > 0.0 {
        f64::from_bits(x.to_bits() + 1)
    } else {
        f64::from_bits(x.to_bits() - 1)
    }
}

/// Pareto law with survival `min(1, x^{-a})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pareto {
    a: f64,
}

impl Pareto {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 1.0) || !a.is_finite() {
            return Err(Error::InfiniteMean(a));
        }
        Ok(Self { a })
    }

    pub fn tail_index(&self) -> f64 {
        self.a
    }
}

impl TargetDistribution for Pareto {
    fn name(&self) -> String {
        format!("pareto:a={}", self.a)
    }

    fn left_endpoint(&self) -> f64 {
        1.0
    }

    fn log_survival(&self, x: f64) -> f64 {
        if x <= 1.0 {
            0.0
        } else {
            -self.a * x.ln()
        }
    }

    fn inverse_log_survival(&self, log_p: f64) -> f64 {
        (-log_p / self.a).exp()
    }

    fn density(&self, x: f64) -> Option<f64> {
        Some(if x < 1.0 { 0.0 } else { self.a * x.powf(-self.a - 1.0) })
    }

    fn mean(&self) -> Result<f64> {
        Ok(self.a / (self.a - 1.0))
    }
}

/// Exponential law with the given rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponential {
    rate: f64,
}

impl Exponential {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter {
                name: "rate",
                value: rate,
                reason: "must be positive and finite",
            });
        }
        Ok(Self { rate })
    }
}

impl TargetDistribution for Exponential {
    fn name(&self) -> String {
        format!("exp:rate={}", self.rate)
    }

    fn left_endpoint(&self) -> f64 {
        0.0
    }

    fn log_survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -self.rate * x
        }
    }

    fn inverse_log_survival(&self, log_p: f64) -> f64 {
        -log_p / self.rate
    }

    fn density(&self, x: f64) -> Option<f64> {
        Some(if x < 0.0 { 0.0 } else { self.rate * (-self.rate * x).exp() })
    }

    fn mean(&self) -> Result<f64> {
        Ok(1.0 / self.rate)
    }
}

/// Uniform law on (0, 1); the only built-in family with bounded support.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Uniform;

impl TargetDistribution for Uniform {
    fn name(&self) -> String {
        "uniform".to_string()
    }

    fn bounded_above(&self) -> bool {
        true
    }

    fn left_endpoint(&self) -> f64 {
        0.0
    }

    fn log_survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            f64::NEG_INFINITY
        } else {
            (-x).ln_1p()
        }
    }

    fn inverse_log_survival(&self, log_p: f64) -> f64 {
        -log_p.exp_m1()
    }

    fn density(&self, x: f64) -> Option<f64> {
        Some(if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 })
    }

    fn mean(&self) -> Result<f64> {
        Ok(0.5)
    }
}

/// Law of the input vector of a black-box target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputLaw {
    StandardGaussian,
    /// Uniform on the cube `[-1/2, 1/2]^d`.
    UniformCube,
}

pub type Integrand = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `X = g(U)` with `U` drawn from `input_law` and `g` deterministic.
#[derive(Clone)]
pub struct BlackBoxTarget {
    pub name: String,
    pub dimension: usize,
    pub input_law: InputLaw,
    pub integrand: Integrand,
}

impl fmt::Debug for BlackBoxTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlackBoxTarget")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("input_law", &self.input_law)
            .finish()
    }
}

impl BlackBoxTarget {
    pub fn evaluate(&self, u: &[f64]) -> f64 {
        (self.integrand)(u)
    }

    pub fn draw_input<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self.input_law {
            InputLaw::StandardGaussian => (0..self.dimension)
                .map(|_| rng.sample(rand_distr::StandardNormal))
                .collect(),
            InputLaw::UniformCube => (0..self.dimension)
                .map(|_| rng.random::<f64>() - 0.5)
                .collect(),
        }
    }

    pub fn conditional_mode(&self) -> ConditionalMode {
        ConditionalMode::McmcBlackbox
    }
}

/// Dimension of the plateau-and-spike integrands.
pub const SPIKE_DIMENSION: usize = 20;
/// Width of the spike in the plateau-and-spike integrand.
pub const SPIKE_WIDTH: f64 = 0.01;
/// Narrower spike used by the heavy-tailed variant.
pub const HEAVYTAIL_SPIKE_WIDTH: f64 = 0.001;
/// Width of the plateau.
pub const PLATEAU_WIDTH: f64 = 0.1;
/// Weight of the spike relative to the plateau.
pub const SPIKE_WEIGHT: f64 = 100.0;

/// `Σ u_i²` together with the log of the product of centred normal densities
/// of the given width.
fn log_gaussian_product(sq_norm: f64, dimension: usize, width: f64) -> f64 {
    let log_norm = -(dimension as f64) * (width * (2.0 * std::f64::consts::PI).sqrt()).ln();
    log_norm - sq_norm / (2.0 * width * width)
}

fn spike_value(sq_norm: f64, dimension: usize, spike_width: f64) -> f64 {
    SPIKE_WEIGHT * log_gaussian_product(sq_norm, dimension, spike_width).exp()
        + log_gaussian_product(sq_norm, dimension, PLATEAU_WIDTH).exp()
}

/// A narrow Gaussian spike of mass 100 on top of a wide Gaussian plateau of
/// mass 1, both centred in the unit cube `[-1/2, 1/2]^20`.
pub fn spike_target() -> BlackBoxTarget {
    BlackBoxTarget {
        name: "spike".to_string(),
        dimension: SPIKE_DIMENSION,
        input_law: InputLaw::UniformCube,
        integrand: Arc::new(|u: &[f64]| {
            let sq: f64 = u.iter().map(|v| v * v).sum();
            spike_value(sq, u.len(), SPIKE_WIDTH)
        }),
    }
}

/// The spike integrand with a narrower spike, divided by `(Σ u_i²)^{0.4 d}`
/// so that `g(U)` has a power-law tail.
pub fn heavytail_target() -> BlackBoxTarget {
    BlackBoxTarget {
        name: "heavytail".to_string(),
        dimension: SPIKE_DIMENSION,
        input_law: InputLaw::UniformCube,
        integrand: Arc::new(|u: &[f64]| {
            let sq: f64 = u.iter().map(|v| v * v).sum();
            let exponent = 0.4 * u.len() as f64;
            spike_value(sq, u.len(), HEAVYTAIL_SPIKE_WIDTH) / sq.powf(exponent)
        }),
    }
}

/// Exact mean of the spike integrand over the cube: a product of 1-D
/// Gaussian masses of `[-1/2, 1/2]`.
pub fn spike_reference_mean() -> f64 {
    let mass = |w: f64| statrs::function::erf::erf(0.5 / (w * std::f64::consts::SQRT_2));
    let d = SPIKE_DIMENSION as i32;
    SPIKE_WEIGHT * mass(SPIKE_WIDTH).powi(d) + mass(PLATEAU_WIDTH).powi(d)
}

/// Mean of the heavy-tailed integrand. The spike term is `100 E[|wZ|^{-16}]`
/// with `Z` standard normal in 20 dimensions, i.e. `100 w^{-16} 2^{-8} Γ(2)/Γ(10)`;
/// its mass outside the cube is far below double precision.
pub fn heavytail_reference_mean() -> f64 {
    let d = SPIKE_DIMENSION as f64;
    let k = 0.4 * d; // power of |u|^2 removed
    let ln_moment = -k * 2f64.ln() + statrs::function::gamma::ln_gamma(d / 2.0 - k)
        - statrs::function::gamma::ln_gamma(d / 2.0);
    let spike = SPIKE_WEIGHT * (ln_moment - 2.0 * k * HEAVYTAIL_SPIKE_WIDTH.ln()).exp();
    let plateau = plateau_over_cube_heavytail();
    spike + plateau
}

/// `∫ φ_v(u) |u|^{-16} du` over the inscribed ball of radius 1/2. The rest of
/// the cube adds a share that is negligible next to the spike term.
fn plateau_over_cube_heavytail() -> f64 {
    let d = SPIKE_DIMENSION as f64;
    let k = 0.4 * d;
    let w = PLATEAU_WIDTH;
    // Radial density of |u| for an isotropic Gaussian of width w in d dims.
    let ln_c = (1.0 - d / 2.0) * 2f64.ln() - statrs::function::gamma::ln_gamma(d / 2.0) - d * w.ln();
    let f = |r: f64| {
        if r <= 0.0 {
            return 0.0;
        }
        (ln_c + (d - 1.0 - 2.0 * k) * r.ln() - r * r / (2.0 * w * w)).exp()
    };
    numeric::integrate(f, 0.0, 0.5, 1e-12).value
}

/// Splits a signed sample into its positive and negative parts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SignedSplit {
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
}

impl SignedSplit {
    /// `E[X⁺] − E[X⁻]` from the two sample means.
    pub fn mean_estimate(&self) -> f64 {
        let mean = |v: &[f64]| {
            if v.is_empty() {
                0.0
            } else {
                numeric::mean_variance(v).0
            }
        };
        mean(&self.positive) - mean(&self.negative)
    }
}

pub fn split_signed<I: IntoIterator<Item = f64>>(samples: I) -> SignedSplit {
    let mut split = SignedSplit::default();
    for x in samples {
        split.positive.push(x.max(0.0));
        split.negative.push((-x).max(0.0));
    }
    split
}

/// A parsed distribution specification.
#[derive(Debug, Clone)]
pub enum Target {
    Analytic(Arc<dyn TargetDistribution>),
    BlackBox(BlackBoxTarget),
}

impl Target {
    /// Parses `pareto:a=<real>`, `exp:rate=<real>`, `uniform`, `spike` or `heavytail`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (family, args) = match spec.split_once(':') {
            Some((f, a)) => (f, Some(a)),
            None => (spec, None),
        };
        let param = |key: &str| -> Result<f64> {
            let args = args.ok_or_else(|| Error::Parse(spec.to_string()))?;
            let (k, v) = args.split_once('=').ok_or_else(|| Error::Parse(spec.to_string()))?;
            if k.trim() != key {
                return Err(Error::Parse(spec.to_string()));
            }
            v.trim().parse::<f64>().map_err(|_| Error::Parse(spec.to_string()))
        };
        let no_args = || {
            if args.is_some() {
                Err(Error::Parse(spec.to_string()))
            } else {
                Ok(())
            }
        };
        match family {
            "pareto" => Ok(Target::Analytic(Arc::new(Pareto::new(param("a")?)?))),
            "exp" => Ok(Target::Analytic(Arc::new(Exponential::new(param("rate")?)?))),
            "uniform" => no_args().map(|_| Target::Analytic(Arc::new(Uniform))),
            "spike" => no_args().map(|_| Target::BlackBox(spike_target())),
            "heavytail" => no_args().map(|_| Target::BlackBox(heavytail_target())),
            _ => Err(Error::Parse(spec.to_string())),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Target::Analytic(d) => d.name(),
            Target::BlackBox(b) => b.name.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pareto_survival_values() {
        let p = Pareto::new(2.0).unwrap();
        assert_eq!(p.survival(2.0), 0.25);
        assert_eq!(p.survival(0.5), 1.0);
        let p = Pareto::new(1.5).unwrap();
        assert!((p.survival(4.0) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn pareto_rejects_infinite_mean() {
        assert_eq!(Pareto::new(1.0), Err(Error::InfiniteMean(1.0)));
        assert!(Pareto::new(0.5).is_err());
    }

    #[test]
    fn conditional_pareto_inverse_transform() {
        let p = Pareto::new(2.0).unwrap();
        let x = conditional_sample_exact(&p, 1.0, 0.25).unwrap();
        assert!((x - 2.0).abs() < 1e-14);
    }

    #[test]
    fn conditional_exponential_from_zero_is_unconditional() {
        let e = Exponential::new(1.0).unwrap();
        let x = conditional_sample_exact(&e, 0.0, 0.3).unwrap();
        assert!((x + 0.3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn conditional_draw_near_one_stays_above_level() {
        let e = Exponential::new(1.0).unwrap();
        let x = conditional_sample_exact(&e, 2.0, 1.0 - 1e-12).unwrap();
        assert!(x > 2.0 && x < 2.0 + 1e-9);
        let x = conditional_sample_exact(&e, 2.0, 1.0).unwrap();
        assert!(x > 2.0);
    }

    #[test]
    fn uniform_exhausts_at_one() {
        assert_eq!(
            conditional_sample_exact(&Uniform, 1.0, 0.5),
            Err(Error::ExhaustedSupport { level: 1.0 })
        );
    }

    #[test]
    fn split_signed_examples() {
        let s = split_signed([3.0]);
        assert_eq!((s.positive[0], s.negative[0]), (3.0, 0.0));
        let s = split_signed([-2.0]);
        assert_eq!((s.positive[0], s.negative[0]), (0.0, 2.0));
        assert!((split_signed([-1.0, 4.0]).mean_estimate() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn parse_specs() {
        assert_eq!(Target::parse("pareto:a=2").unwrap().name(), "pareto:a=2");
        assert_eq!(Target::parse("exp:rate=0.5").unwrap().name(), "exp:rate=0.5");
        assert_eq!(Target::parse("uniform").unwrap().name(), "uniform");
        assert_eq!(Target::parse("spike").unwrap().name(), "spike");
        assert!(matches!(Target::parse("heavytail").unwrap(), Target::BlackBox(_)));
        assert!(Target::parse("pareto:b=2").is_err());
        assert!(Target::parse("pareto:a=1").is_err());
        assert!(Target::parse("uniform:x=1").is_err());
        assert!(Target::parse("normal").is_err());
    }

    #[test]
    fn spike_reference_is_about_101() {
        let m = spike_reference_mean();
        assert!((m - 101.0).abs() < 0.1, "{m}");
    }

    #[test]
    fn heavytail_reference_order() {
        let m = heavytail_reference_mean();
        assert!((m / 1.0765e42 - 1.0).abs() < 1e-3, "{m:e}");
    }

    #[test]
    fn heavytail_power_law_slope() {
        // Away from the spike, log g falls by 16 per unit of log radius (0.8
        // per unit of -log p for a 20-dimensional ball) plus the plateau's
        // Gaussian decay.
        let t = heavytail_target();
        let at = |r: f64| {
            let mut u = vec![0.0; SPIKE_DIMENSION];
            u[0] = r;
            t.evaluate(&u)
        };
        let slope = (at(0.03).ln() - at(0.06).ln()) / 2f64.ln();
        let plateau = (0.06f64.powi(2) - 0.03f64.powi(2)) / (2.0 * PLATEAU_WIDTH * PLATEAU_WIDTH) / 2f64.ln();
        assert!((slope - 16.0 - plateau).abs() < 1e-9, "{slope}");
    }
}
