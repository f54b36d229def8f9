use std::convert::Infallible;

use crnforge_core::stats::{converge, mean, sample_stddev, ConvergenceParams, ConvergenceReport, ConvergenceTracker, Step};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Accuracy of one replication: `samples` Bernoulli(p) trials.
fn bernoulli_runner(p: f64, samples: usize, seed: u64) -> impl FnMut(usize) -> Result<f64, Infallible> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    move |_| Ok((0..samples).filter(|_| rng.random_bool(p)).count() as f64 / samples as f64)
}

fn simulate(p: f64, seed: u64) -> ConvergenceReport {
    converge(ConvergenceParams::default(), bernoulli_runner(p, 200, seed)).unwrap()
}

#[test]
fn bernoulli_runs_converge_near_the_truth() {
    let close = (0..100)
        .map(|seed| simulate(0.8, seed))
        .filter(|r| r.converged && (r.mean - 0.8).abs() <= 0.03)
        .count();
    assert!(close >= 95, "{close}/100");
}

#[test]
fn final_intervals_cover_the_truth() {
    let runs = 500;
    let covered = (0..runs)
        .map(|seed| simulate(0.8, 10_000 + seed))
        .filter(|r| (r.mean - 0.8).abs() <= r.half_width)
        .count();
    assert!(covered as f64 / runs as f64 >= 0.97, "{covered}/{runs}");
}

proptest! {
    #[test]
    fn constant_runners_stop_at_the_earliest_check(
        value in 0.0f64..=1.0,
        n_min in 2usize..10,
        k_limit in 1usize..5,
    ) {
        let params = ConvergenceParams { n_min, k_limit, n_max: 100, ..ConvergenceParams::default() };
        let r = converge::<Infallible, _>(params, |_| Ok(value)).unwrap();
        prop_assert!(r.converged);
        prop_assert_eq!(r.n, n_min + k_limit);
        prop_assert_eq!(r.stddev, 0.0);
        prop_assert!((r.mean - value).abs() < 1e-12);
    }

    #[test]
    fn never_exceeds_the_cap(values in prop::collection::vec(0.0f64..=1.0, 1..80), n_max in 3usize..40) {
        let params = ConvergenceParams { n_max, ..ConvergenceParams::default() };
        let mut tracker = ConvergenceTracker::new(params);
        for v in &values {
            if tracker.push(*v) != Step::Continue {
                break;
            }
        }
        let r = tracker.report();
        prop_assert!(r.n <= n_max);
        prop_assert!(r.n <= values.len());
        prop_assert_eq!(r.accuracies.len(), r.n);
        prop_assert!((r.mean - mean(&r.accuracies)).abs() < 1e-12);
        prop_assert!((r.stddev - sample_stddev(&r.accuracies)).abs() < 1e-12);
        prop_assert!(r.n < params.n_min + params.k_limit || !r.converged || r.half_width <= params.dn);
    }

    #[test]
    fn mean_and_stddev_are_order_free(mut values in prop::collection::vec(0.0f64..=1.0, 2..30)) {
        let (m, s) = (mean(&values), sample_stddev(&values));
        values.reverse();
        prop_assert!((mean(&values) - m).abs() < 1e-12);
        prop_assert!((sample_stddev(&values) - s).abs() < 1e-12);
    }
}
