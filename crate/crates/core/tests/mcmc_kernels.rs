use statrs::distribution::{ContinuousCDF, Normal};

use ppmc_core::distributions::{spike_target, SPIKE_DIMENSION};
use ppmc_core::estimators::randomized_z_truncated;
use ppmc_core::experiments::experiment_kernel;
use ppmc_core::mcmc::{kernel_step_cube, kernel_step_gaussian, KernelState, McmcSampler};
use ppmc_core::randomize::{beta_app, RandomizationScheme};
use ppmc_core::replicas::replica_rng;
use ppmc_core::stats::{ks_test, ks_two_sample};
use ppmc_core::walk::{generate_merged, LevelSampler, SimRng};

const SEED: u64 = 424_242;

type Step = fn(&mut KernelState, f64, &dyn Fn(&[f64]) -> f64, &mut SimRng) -> bool;

/// Every `thin`-th state of a one-dimensional chain on `{u : u > threshold}`.
fn chain(step: Step, start: f64, sigma: f64, threshold: f64, states: usize, thin: usize, seed: u64) -> Vec<f64> {
    let g = |u: &[f64]| u[0];
    let mut rng = replica_rng(seed, 0);
    let mut state = KernelState::new(vec![start], start, sigma);
    let mut out = Vec::with_capacity(states);
    for k in 0..states * thin {
        step(&mut state, threshold, &g, &mut rng);
        if k % thin == thin - 1 {
            out.push(state.u[0]);
        }
    }
    out
}

fn gaussian(s: &mut KernelState, t: f64, g: &dyn Fn(&[f64]) -> f64, rng: &mut SimRng) -> bool {
    kernel_step_gaussian(s, t, g, rng)
}

fn cube(s: &mut KernelState, t: f64, g: &dyn Fn(&[f64]) -> f64, rng: &mut SimRng) -> bool {
    kernel_step_cube(s, t, g, rng)
}

#[test]
fn gaussian_kernel_keeps_standard_normal() {
    let xs = chain(gaussian, 0.0, 0.5, f64::NEG_INFINITY, 100_000, 10, SEED);
    let normal = Normal::standard();
    let ks = ks_test(&xs, |x| normal.cdf(x));
    assert!(ks.p_value > 0.001, "D = {}, p = {}", ks.statistic, ks.p_value);
}

#[test]
fn gaussian_kernel_keeps_truncated_normal() {
    let normal = Normal::standard();
    let tail = 1.0 - normal.cdf(1.0);
    let xs = chain(gaussian, 1.5, 0.5, 1.0, 20_000, 20, SEED + 1);
    assert!(xs.iter().all(|&x| x > 1.0));
    let ks = ks_test(&xs, |x| 1.0 - (1.0 - normal.cdf(x)) / tail);
    assert!(ks.p_value > 0.001, "D = {}, p = {}", ks.statistic, ks.p_value);
}

#[test]
fn cube_kernel_keeps_uniform() {
    let xs = chain(cube, 0.0, 0.3, f64::NEG_INFINITY, 20_000, 10, SEED + 2);
    assert!(xs.iter().all(|&x| x.abs() <= 0.5));
    let ks = ks_test(&xs, |x| (x + 0.5).clamp(0.0, 1.0));
    assert!(ks.p_value > 0.001, "D = {}, p = {}", ks.statistic, ks.p_value);
}

#[test]
fn cube_kernel_keeps_restricted_uniform() {
    let xs = chain(cube, 0.3, 0.1, 0.2, 20_000, 10, SEED + 3);
    assert!(xs.iter().all(|&x| x > 0.2 && x <= 0.5));
    let ks = ks_test(&xs, |x| ((x - 0.2) / 0.3).clamp(0.0, 1.0));
    assert!(ks.p_value > 0.001, "D = {}, p = {}", ks.statistic, ks.p_value);
}

#[test]
fn stationary_chain_is_reversible_at_lag_one() {
    // Under reversibility (X_t, X_{t+1}) and (X_{t+1}, X_t) have the same law,
    // so the increments are symmetric about zero.
    let xs = chain(gaussian, 0.0, 0.8, 0.3, 40_000, 1, SEED + 4);
    let forward: Vec<f64> = xs.windows(2).step_by(4).map(|w| w[1] - w[0]).collect();
    let backward: Vec<f64> = xs.windows(2).skip(2).step_by(4).map(|w| w[0] - w[1]).collect();
    let ks = ks_two_sample(&forward, &backward);
    assert!(ks.p_value > 0.001, "D = {}, p = {}", ks.statistic, ks.p_value);
}

#[test]
fn adaptation_holds_acceptance_near_half_on_spike() {
    let target = spike_target();
    let mut sampler = McmcSampler::new(target.clone(), experiment_kernel(&target)).unwrap();
    let mut rng = replica_rng(SEED, 5);
    generate_merged(&mut sampler, 100, 3000, &mut rng).unwrap();
    let rate = sampler.acceptance_rate();
    assert!((0.4..=0.6).contains(&rate), "acceptance rate {rate}");
}

#[test]
fn cost_counts_every_evaluation() {
    let target = spike_target();
    let kernel = experiment_kernel(&target);
    let n = SPIKE_DIMENSION * 2;
    let scheme = RandomizationScheme::geometric(beta_app(n).unwrap()).unwrap();
    for (replica, truncation) in [(0u64, 0u64), (1, 7), (2, 150)] {
        let mut sampler = McmcSampler::new(target.clone(), kernel).unwrap();
        let mut rng = replica_rng(SEED, replica);
        let draw = randomized_z_truncated(&mut sampler, n, &scheme, truncation, &mut rng).unwrap();
        assert!(!draw.exhausted);
        assert_eq!(draw.cost, n as u64 + kernel.burn_in * truncation);
        assert_eq!(sampler.evaluations(), draw.cost);
    }
}
