//! Invariants over random chains, permutations and value vectors.

use antijam::markov::{
    build_circulant, circulant_normalized_uncertainty, exact_oracle, random_permutation, uncertainty, ChainSpec,
    TransitionMatrix,
};
use antijam::rl::mellowmax;
use antijam::strategies::{analytic_jam_probability, oracle_strategies};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn odd_n() -> impl Strategy<Value = usize> {
    (1usize..=7).prop_map(|k| 2 * k + 1)
}

fn random_chain(n: usize, seed: u64) -> TransitionMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..n).map(|_| 0.01 + rand::Rng::random::<f64>(&mut rng)).collect();
            let s: f64 = raw.iter().sum();
            raw.iter().map(|v| v / s).collect()
        })
        .collect();
    TransitionMatrix::from_rows(&rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circulant_rows_sum_to_one(n in odd_n(), theta in 0.0f64..0.99, eps_scale in 0.001f64..0.9) {
        let epsilon = eps_scale / n as f64;
        let chain = build_circulant(&ChainSpec::new(n, theta, epsilon)).unwrap();
        for row in chain.rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn uncertainty_rises_with_theta(n in odd_n(), a in 0.0f64..0.98, b in 0.0f64..0.98) {
        prop_assume!((a - b).abs() > 1e-6);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let h_lo = circulant_normalized_uncertainty(n, lo, 0.001).unwrap();
        let h_hi = circulant_normalized_uncertainty(n, hi, 0.001).unwrap();
        prop_assert!(h_hi > h_lo, "theta {lo} -> {h_lo}, theta {hi} -> {h_hi}");
    }

    #[test]
    fn row_permutation_keeps_uncertainty(n in odd_n(), theta in 0.0f64..0.95, seed in any::<u64>()) {
        let chain = build_circulant(&ChainSpec::new(n, theta, 0.001)).unwrap();
        let perm = random_permutation(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let permuted = chain.permute_rows(&perm).unwrap();
        let (u0, u1) = (uncertainty(&chain), uncertainty(&permuted));
        prop_assert!((u0.normalized - u1.normalized).abs() < 1e-12);
        prop_assert!((u1.stationary.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn normalized_uncertainty_in_unit_interval(n in 2usize..9, seed in any::<u64>()) {
        let rep = uncertainty(&random_chain(n, seed));
        prop_assert!(rep.normalized >= 0.0 && rep.normalized <= 1.0 + 1e-12);
        prop_assert!((rep.lambda_max - n as f64).abs() < 1e-9);
    }

    #[test]
    fn mellowmax_between_mean_and_max(values in prop::collection::vec(-5.0f64..5.0, 1..12), omega in 0.1f64..60.0) {
        let mm = mellowmax(&values, omega);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        prop_assert!(mm <= max + 1e-9);
        prop_assert!(mm >= mean - 1e-9);
    }

    #[test]
    fn strategy_ordering_on_random_chains(n in 3usize..8, seed in any::<u64>()) {
        let chain = random_chain(n, seed);
        let oracle = exact_oracle(&chain, 0.1).unwrap();
        let [random, karaa, lara] = oracle_strategies(&oracle);
        let (pr, pk, pl) = (
            analytic_jam_probability(&chain, &random),
            analytic_jam_probability(&chain, &karaa),
            analytic_jam_probability(&chain, &lara),
        );
        prop_assert!(pl <= pk + 1e-12 && pk <= pr + 1e-12, "{pl} {pk} {pr}");
        prop_assert!((pr - 1.0 / n as f64).abs() < 1e-12);
    }
}
