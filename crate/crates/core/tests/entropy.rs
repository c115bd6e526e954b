use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use coherence::entropy::{relative_entropy, von_neumann_entropy};
use coherence::lab::random::random_density_with;
use coherence::state::DensityMatrix;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 200,
        rng_seed: RngSeed::Fixed(0xe27),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn entropy_between_zero_and_log_d(d in 1usize..=6, rank in 1usize..=6, seed: u64) {
        let rank = rank.min(d);
        let rho = random_density_with(&mut ChaCha8Rng::seed_from_u64(seed), d, rank).unwrap();
        let s = von_neumann_entropy(&rho).unwrap();
        prop_assert!(s >= 0.0);
        prop_assert!(s <= (d as f64).log2() + 1e-10);
        prop_assert!(s <= (rank as f64).log2() + 1e-10);
    }

    #[test]
    fn klein_inequality(d in 2usize..=5, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density_with(&mut rng, d, d).unwrap();
        let sigma = random_density_with(&mut rng, d, d).unwrap();
        prop_assert!(relative_entropy(&rho, &sigma).unwrap() >= -1e-9);
        prop_assert!(relative_entropy(&rho, &rho).unwrap().abs() < 1e-9);
    }

    #[test]
    fn maximally_mixed_has_log_d(d in 1usize..=8) {
        let s = von_neumann_entropy(&DensityMatrix::maximally_mixed(d).unwrap()).unwrap();
        prop_assert!((s - (d as f64).log2()).abs() < 1e-12);
    }
}
