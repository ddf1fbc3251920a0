use std::sync::Arc;

use proptest::prelude::*;

use ppmc_core::distributions::{conditional_sample_exact, Exponential, Pareto, TargetDistribution};
use ppmc_core::estimators::{prob_mvue, truncated_sum};
use ppmc_core::pareto_oracle::ParetoOracle;
use ppmc_core::randomize::{beta_app, RandomizationScheme};
use ppmc_core::replicas::replica_rng;
use ppmc_core::walk::{extend_walk, generate_merged, merge_walks, ExactSampler, MergedProcess, Walk};

fn law(pareto: bool, param: f64) -> Arc<dyn TargetDistribution> {
    if pareto {
        Arc::new(Pareto::new(param).unwrap())
    } else {
        Arc::new(Exponential::new(param).unwrap())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn geometric_survival_is_a_valid_tail(beta in 1e-4f64..5.0, seed in any::<u64>()) {
        let scheme = RandomizationScheme::geometric(beta).unwrap();
        prop_assert_eq!(scheme.survival(0), 1.0);
        let mut prev = 1.0;
        for i in 1..50u64 {
            let s = scheme.survival(i);
            prop_assert!(s > 0.0 && s <= prev);
            prop_assert!((s.ln() - scheme.log_survival(i)).abs() < 1e-9 * (1.0 + s.ln().abs()));
            prev = s;
        }
        // E[T] = Σ_{i≥1} e^{−βi}.
        let expected = 1.0 / beta.exp_m1();
        prop_assert!((scheme.expected_truncation() - expected).abs() <= 1e-9 * expected.max(1.0));
        let mut rng = replica_rng(seed, 0);
        for _ in 0..20 {
            let t = scheme.sample(&mut rng);
            prop_assert!(scheme.survival(t) > 0.0);
        }
    }

    #[test]
    fn explicit_scheme_keeps_its_table(raw in proptest::collection::vec(0.05f64..1.0, 1..12), tail in 0.1f64..0.95) {
        // Make the table non-increasing with β_0 = 1.
        let mut table = vec![1.0];
        for r in raw {
            let last = *table.last().unwrap();
            table.push(last * r);
        }
        let scheme = RandomizationScheme::explicit(table.clone(), tail).unwrap();
        for (i, &b) in table.iter().enumerate() {
            prop_assert!((scheme.survival(i as u64) - b).abs() <= 1e-12 * b);
        }
        let past = scheme.survival(table.len() as u64);
        prop_assert!((past - table.last().unwrap() * tail).abs() <= 1e-12 * past);
    }

    #[test]
    fn beta_app_targets_n_squared_cost(n in 2usize..2000) {
        let scheme = RandomizationScheme::geometric(beta_app(n).unwrap()).unwrap();
        let target = (n * n - 1) as f64;
        prop_assert!((scheme.expected_truncation() - target).abs() < 1e-6 * target);
    }

    #[test]
    fn merged_levels_are_sorted(pareto in any::<bool>(), param in 1.2f64..4.0, n in 2usize..12, steps in 1usize..40, seed in any::<u64>()) {
        let dist = law(pareto, param);
        let walks: Vec<Walk> = (0..n)
            .map(|i| {
                let mut w = Walk::new(dist.name(), seed);
                let mut rng = replica_rng(seed, i as u64);
                extend_walk(&mut w, dist.as_ref(), steps, &mut rng).unwrap();
                w
            })
            .collect();
        for w in &walks {
            prop_assert!(w.levels.windows(2).all(|p| p[0] < p[1]));
        }
        let merged = merge_walks(&walks).unwrap();
        prop_assert_eq!(merged.len(), n * steps);
        prop_assert!(merged.levels.windows(2).all(|p| p[0] <= p[1]));
        let min_top = walks.iter().map(|w| w.top().unwrap()).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(merged.frontier, min_top);
    }

    #[test]
    fn streamed_process_is_increasing(pareto in any::<bool>(), param in 1.2f64..4.0, n in 2usize..30, seed in any::<u64>()) {
        let mut sampler = ExactSampler::new(law(pareto, param));
        let mut rng = replica_rng(seed, 0);
        let merged = generate_merged(&mut sampler, n, 200, &mut rng).unwrap();
        prop_assert!(merged.levels.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn partial_sums_never_decrease(param in 1.2f64..4.0, n in 2usize..30, seed in any::<u64>()) {
        let mut sampler = ExactSampler::new(law(true, param));
        let mut rng = replica_rng(seed, 0);
        let merged = generate_merged(&mut sampler, n, 100, &mut rng).unwrap();
        let mut prev = 0.0;
        for k in 1..=merged.len() {
            let prefix = MergedProcess {
                levels: merged.levels[..k].to_vec(),
                per_walk_index: merged.per_walk_index[..k].to_vec(),
                ..merged.clone()
            };
            let s = truncated_sum(&prefix, k).unwrap();
            prop_assert!(s >= prev);
            prev = s;
        }
    }

    #[test]
    fn conditional_draws_clear_the_threshold(pareto in any::<bool>(), param in 1.2f64..4.0, level in 0.0f64..50.0, u in 1e-12f64..1.0) {
        let dist = law(pareto, param);
        let x = conditional_sample_exact(dist.as_ref(), level, u).unwrap();
        prop_assert!(x > level);
    }

    #[test]
    fn mvue_is_a_decreasing_probability(n in 2usize..500, count in 0u64..5000) {
        // Stay clear of underflow.
        prop_assume!((count + 1) as f64 * (-1.0 / n as f64).ln_1p() > -700.0);
        let p = prob_mvue(count, n).unwrap();
        let q = prob_mvue(count + 1, n).unwrap();
        prop_assert!(p > 0.0 && p <= 1.0);
        prop_assert!(q < p);
    }

    #[test]
    fn pareto_deltas_increase(a in 1.5f64..5.0, n in 2usize..60) {
        let oracle = ParetoOracle::new(a).unwrap();
        prop_assume!(oracle.q_ratio(n) < 1.0 && a * n as f64 > 2.0);
        let q = oracle.q_sequence(n, 200).unwrap();
        let deltas = q.deltas();
        // Past this point the increments are below the rounding of the partial sums.
        let resolved = q.values.iter().take_while(|&&v| v > 1e-10 * q.values[0]).count().min(deltas.len());
        prop_assert!(resolved >= 3);
        prop_assert!(deltas[..resolved].windows(2).all(|d| d[1] > d[0]), "{:?}", &deltas[..resolved]);
    }
}
