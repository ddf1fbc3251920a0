//! Markov-chain conditional sampling for black-box targets `X = g(U)`.
//!
//! A chain is started from a randomly chosen member of the current
//! population above the threshold and moved `b` times with a kernel that
//! leaves the input law restricted to `{g > x}` invariant.

use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::distributions::{BlackBoxTarget, InputLaw};
use crate::error::{Error, Result};
use crate::walk::{LevelSampler, Particle, SimRng};

/// Initial step size.
pub const DEFAULT_SIGMA0: f64 = 0.3;
/// Default number of kernel steps per conditional draw.
pub const DEFAULT_BURN_IN: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    /// `U* = (u + σW)/sqrt(1 + σ²)`, reversible for the standard Gaussian.
    Gaussian,
    /// `U* = u + σW`, rejected outside `[-1/2, 1/2]^d`; reversible for the
    /// uniform law on the cube.
    Cube,
}

impl KernelKind {
    /// Kernel that preserves the given input law.
    pub fn for_law(law: InputLaw) -> Self {
        match law {
            InputLaw::StandardGaussian => KernelKind::Gaussian,
            InputLaw::UniformCube => KernelKind::Cube,
        }
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelKind::Gaussian),
            "cube" => Ok(KernelKind::Cube),
            _ => Err(Error::Parse(s.to_string())),
        }
    }
}

/// Tuning of the conditional sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelConfig {
    pub kind: KernelKind,
    pub sigma0: f64,
    pub burn_in: u64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl KernelConfig {
    pub fn for_target(target: &BlackBoxTarget) -> Self {
        Self {
            kind: KernelKind::for_law(target.input_law),
            sigma0: DEFAULT_SIGMA0,
            burn_in: DEFAULT_BURN_IN,
            sigma_min: 1e-3,
            sigma_max: 10.0,
        }
    }

    pub fn validate(&self, target: &BlackBoxTarget) -> Result<()> {
        if self.kind != KernelKind::for_law(target.input_law) {
            return Err(Error::InvalidParameter {
                name: "kernel",
                value: f64::NAN,
                reason: "kernel does not preserve the input law of the target",
            });
        }
        if !(self.sigma0 > 0.0) || !(self.sigma_min > 0.0) || !(self.sigma_min <= self.sigma_max) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: self.sigma0,
                reason: "step sizes must be positive with sigma_min <= sigma_max",
            });
        }
        Ok(())
    }
}

/// Current point of a chain with its integrand value and step size.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelState {
    pub u: Vec<f64>,
    pub value: f64,
    pub sigma: f64,
    pub accepted: u64,
    pub proposed: u64,
}

impl KernelState {
    pub fn new(u: Vec<f64>, value: f64, sigma: f64) -> Self {
        Self {
            u,
            value,
            sigma,
            accepted: 0,
            proposed: 0,
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// One autoregressive Gaussian move, accepted iff `g(U*) > threshold`.
pub fn kernel_step_gaussian<G: Fn(&[f64]) -> f64 + ?Sized>(state: &mut KernelState, threshold: f64, g: &G, rng: &mut SimRng) -> bool {
    let scale = 1.0 / (1.0 + state.sigma * state.sigma).sqrt();
    let proposal: Vec<f64> = state
        .u
        .iter()
        .map(|&x| {
            let w: f64 = rng.sample(StandardNormal);
            (x + state.sigma * w) * scale
        })
        .collect();
    state.proposed += 1;
    let value = g(&proposal);
    if value > threshold {
        state.u = proposal;
        state.value = value;
        state.accepted += 1;
        true
    } else {
        false
    }
}

/// One symmetric random-walk move on the cube `[-1/2, 1/2]^d`.
pub fn kernel_step_cube<G: Fn(&[f64]) -> f64 + ?Sized>(state: &mut KernelState, threshold: f64, g: &G, rng: &mut SimRng) -> bool {
    let proposal: Vec<f64> = state
        .u
        .iter()
        .map(|&x| {
            let w: f64 = rng.sample(StandardNormal);
            x + state.sigma * w
        })
        .collect();
    state.proposed += 1;
    if proposal.iter().any(|x| x.abs() > 0.5) {
        return false;
    }
    let value = g(&proposal);
    if value > threshold {
        state.u = proposal;
        state.value = value;
        state.accepted += 1;
        true
    } else {
        false
    }
}

/// `σ · exp((rate − 0.5)/2)`, clamped to `[1e-3, 10]`.
pub fn adapt_sigma(sigma: f64, observed_rate: f64) -> f64 {
    adapt_sigma_within(sigma, observed_rate, 1e-3, 10.0)
}

/// [`adapt_sigma`] with an explicit clamp.
pub fn adapt_sigma_within(sigma: f64, observed_rate: f64, min: f64, max: f64) -> f64 {
    (sigma * (0.5 * (observed_rate - 0.5)).exp()).clamp(min, max)
}

/// Picks a uniformly random seed from `population`, applies `burn_in` kernel
/// steps above `threshold` and adapts the step size on the batch acceptance
/// rate. Returns the final point and its integrand value.
pub fn conditional_sample_mcmc<G: Fn(&[f64]) -> f64 + ?Sized>(
    population: &[&Particle<Vec<f64>>],
    threshold: f64,
    config: &KernelConfig,
    sigma: &mut f64,
    g: &G,
    rng: &mut SimRng,
) -> Result<KernelState> {
    if population.is_empty() {
        return Err(Error::NoSeed);
    }
    let seed = population[rng.random_range(0..population.len())];
    if !(seed.level > threshold) {
        return Err(Error::Internal("seed does not exceed the threshold".into()));
    }
    let mut state = KernelState::new(seed.point.clone(), seed.level, *sigma);
    for _ in 0..config.burn_in {
        match config.kind {
            KernelKind::Gaussian => kernel_step_gaussian(&mut state, threshold, g, rng),
            KernelKind::Cube => kernel_step_cube(&mut state, threshold, g, rng),
        };
    }
    if config.burn_in > 0 {
        *sigma = adapt_sigma_within(*sigma, state.acceptance_rate(), config.sigma_min, config.sigma_max);
    }
    if !(state.value > threshold) {
        return Err(Error::Internal("chain left the level set".into()));
    }
    Ok(state)
}

/// Level sampler for black-box targets. Unconditional draws cost one
/// evaluation; conditional draws cost `burn_in` evaluations, one per proposal.
#[derive(Debug, Clone)]
pub struct McmcSampler {
    target: BlackBoxTarget,
    config: KernelConfig,
    sigma: f64,
    evaluations: u64,
    accepted: u64,
    proposed: u64,
}

impl McmcSampler {
    pub fn new(target: BlackBoxTarget, config: KernelConfig) -> Result<Self> {
        config.validate(&target)?;
        Ok(Self {
            sigma: config.sigma0,
            target,
            config,
            evaluations: 0,
            accepted: 0,
            proposed: 0,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Acceptance rate over all conditional draws so far.
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

impl LevelSampler for McmcSampler {
    type Point = Vec<f64>;

    fn sample(&mut self, rng: &mut SimRng) -> Result<Particle<Vec<f64>>> {
        let u = self.target.draw_input(rng);
        self.evaluations += 1;
        Ok(Particle {
            level: self.target.evaluate(&u),
            point: u,
        })
    }

    fn sample_above(&mut self, population: &[Particle<Vec<f64>>], replaced: usize, rng: &mut SimRng) -> Result<Particle<Vec<f64>>> {
        let threshold = population[replaced].level;
        let seeds: Vec<&Particle<Vec<f64>>> = population
            .iter()
            .enumerate()
            .filter(|(i, p)| *i != replaced && p.level > threshold)
            .map(|(_, p)| p)
            .collect();
        if seeds.is_empty() && population.len() > 1 {
            // Every survivor ties with the threshold: the level set is below
            // floating-point resolution.
            return Err(Error::ExhaustedSupport { level: threshold });
        }
        let g =|u: &[f64]| self.target.evaluate(u);
        let state = conditional_sample_mcmc(&seeds, threshold, &self.config, &mut self.sigma, &g, rng)?;
        self.evaluations += self.config.burn_in;
        self.accepted += state.accepted;
        self.proposed += state.proposed;
        Ok(Particle {
            level: state.value,
            point: state.u,
        })
    }

    fn evaluations(&self) -> u64 {
        self.evaluations
    }

    fn conditional_cost(&self) -> u64 {
        self.config.burn_in
    }
}
