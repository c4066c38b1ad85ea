use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;
use ramsey_core::{p_excited, sample_record, ProbePulseConfig, TrialSeed};

proptest! {
    #[test]
    fn same_seed_same_record(seed in any::<u64>(), stream in 0u64..64, delta in -3.0..3.0f64, reps in 1u64..5000) {
        let cfg = ProbePulseConfig::single(delta, 1.0).with_gamma(0.1);
        let a = sample_record(&cfg, reps, TrialSeed::new(seed, stream)).unwrap();
        let b = sample_record(&cfg, reps, TrialSeed::new(seed, stream)).unwrap();
        prop_assert_eq!(a.count_excited.to_bits(), b.count_excited.to_bits());
        prop_assert_eq!(a.count_ground.to_bits(), b.count_ground.to_bits());
        prop_assert_eq!(a.repetitions(), reps as f64);
    }
}

fn mean_within_four_sigma(cfg: &ProbePulseConfig, reps: u64) {
    let p = p_excited(cfg).unwrap();
    let seeds = 1000u64;
    let total: f64 = (0..seeds)
        .map(|s| {
            sample_record(cfg, reps, TrialSeed::new(s, 0))
                .unwrap()
                .count_excited
                / reps as f64
        })
        .sum();
    let mean = total / seeds as f64;
    let sigma = (p * (1.0 - p) / (reps * seeds) as f64).sqrt();
    assert!(
        (mean - p).abs() < 4.0 * sigma,
        "mean {mean} vs p {p} (σ {sigma:e})"
    );
}

#[test]
fn empirical_mean_matches_probability_bernoulli_path() {
    mean_within_four_sigma(&ProbePulseConfig::single(1.1, 1.0), 100);
    mean_within_four_sigma(&ProbePulseConfig::ghz(3, 0.4, 1.0).with_gamma(0.05), 37);
}

#[test]
fn empirical_mean_matches_probability_inversion_path() {
    mean_within_four_sigma(&ProbePulseConfig::single(FRAC_PI_2 + 0.3, 1.0), 200_000);
}
