//! Monte-Carlo checks of the samplers and of the success rule.

use metaes_core::{
    mutate_sigma, sample_ne, sample_sigma_uniform, InnerSettings, LmCmaParams, LmCmaState, PathPool,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

#[test]
fn mutated_sigma_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let xs: Vec<f64> = (0..100_000).map(|_| mutate_sigma(1.0, &mut rng)).collect();
    let (m, _) = mean_and_se(&xs);
    assert!((m - 1.8).abs() <= 0.01, "{m}");
    assert!(xs.iter().all(|s| (0.3..=3.3).contains(s)));
}

#[test]
fn uniform_sigma_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let xs: Vec<f64> = (0..100_000).map(|_| sample_sigma_uniform(3.0, &mut rng)).collect();
    let (m, _) = mean_and_se(&xs);
    assert!((m / 1.5 - 1.0).abs() <= 0.01, "{m}");
    assert!(xs.iter().all(|&s| s > 0.0 && s <= 3.0));
}

#[test]
fn ne_frequencies() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut counts = [0usize; 4];
    for _ in 0..100_000 {
        counts[sample_ne(2, 5, &mut rng) - 2] += 1;
    }
    for c in counts {
        assert!((c as f64 / 1e5 - 0.25).abs() <= 0.01, "{counts:?}");
    }
}

/// `ln(sigma_new / sigma_old)` of one step per trial, each taken from a fresh
/// state after a warm-up tell.
fn neutral_log_steps(costs: impl Fn(&mut ChaCha8Rng, usize) -> Vec<f64>, trials: usize) -> Vec<f64> {
    let n = 5;
    let params = LmCmaParams::new(n, 3, &InnerSettings::default()).unwrap();
    let lambda = params.lambda;
    let fresh = LmCmaState::new(params, vec![0.0; n], 1.0, PathPool::new(3), None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    (0..trials)
        .map(|_| {
            let mut state = fresh.clone();
            let warmup = state.ask(&mut rng);
            state.tell(&warmup, &costs(&mut rng, lambda)).unwrap();
            let before = state.sigma();
            let pop = state.ask(&mut rng);
            state.tell(&pop, &costs(&mut rng, lambda)).unwrap();
            (state.sigma() / before).ln()
        })
        .collect()
}

#[test]
fn success_rule_drift_under_identical_costs() {
    let steps = neutral_log_steps(|_, l| vec![1.0; l], 10_000);
    let target = -InnerSettings::default().target_success / InnerSettings::default().damping;
    assert!(steps.iter().all(|s| (s - target).abs() <= 1e-12));
}

#[test]
fn success_rule_drift_under_random_costs() {
    let steps = neutral_log_steps(|rng, l| (0..l).map(|_| rng.random::<f64>()).collect(), 10_000);
    let (m, se) = mean_and_se(&steps);
    let target = -InnerSettings::default().target_success / InnerSettings::default().damping;
    assert!((m - target).abs() <= 3.0 * se, "{m} vs {target} (se {se})");
}

#[test]
fn mean_update_is_unbiased_under_random_ranking() {
    let n = 3;
    let params = LmCmaParams::new(n, 2, &InnerSettings::default()).unwrap();
    let lambda = params.lambda;
    let paths = vec![vec![1.0, 0.5, -0.2], vec![0.3, -1.0, 0.8]];
    let m0 = vec![0.5, -1.0, 2.0];
    let fresh = LmCmaState::new(params, m0.clone(), 0.7, PathPool::from_paths(paths), None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut samples = vec![Vec::new(); n];
    let mut ranks: Vec<f64> = (0..lambda).map(|i| i as f64).collect();
    for _ in 0..10_000 {
        let mut state = fresh.clone();
        let pop = state.ask(&mut rng);
        ranks.shuffle(&mut rng);
        state.tell(&pop, &ranks).unwrap();
        for (s, v) in samples.iter_mut().zip(state.mean()) {
            s.push(*v);
        }
    }
    for (s, target) in samples.iter().zip(&m0) {
        let (m, se) = mean_and_se(s);
        assert!((m - target).abs() <= 3.0 * se, "{m} vs {target} (se {se})");
    }
}
