use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{MetaError, Normalizer, OuterWeights};
use crate::lmcma::{InnerResult, PathPool};

/// Lower factor of the Meta-ES step-size mutation.
pub const MUTATION_LOW: f64 = 0.3;
/// Upper factor of the Meta-ES step-size mutation.
pub const MUTATION_HIGH: f64 = 3.3;

/// Indices of `results` from best to worst.
///
/// Ascending `f_star`; ties go to fewer evaluations, then to the lower index.
/// Non-finite costs sort last. Fails when no cost is finite.
pub fn rank_inner(results: &[InnerResult]) -> Result<Vec<usize>, MetaError> {
    if results.iter().all(|r| !r.f_star.is_finite()) {
        return Err(MetaError::FailedEpoch);
    }
    let key = |r: &InnerResult| if r.f_star.is_finite() { r.f_star } else { f64::INFINITY };
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&a, &b| {
        key(&results[a])
            .total_cmp(&key(&results[b]))
            .then(results[a].evals.cmp(&results[b].evals))
            .then(a.cmp(&b))
    });
    Ok(order)
}

/// `m' = sum_i w_i m_i` over the ranked elitist means.
pub fn recombine_means(ranked_means: &[&[f64]], weights: &OuterWeights) -> Result<Vec<f64>, MetaError> {
    let mu = weights.mu_prime();
    if ranked_means.len() != mu {
        return Err(MetaError::CountMismatch { expected: mu, got: ranked_means.len() });
    }
    let n = ranked_means[0].len();
    let mut out = vec![0.0; n];
    for (m, w) in ranked_means.iter().zip(weights.weights()) {
        if m.len() != n {
            return Err(MetaError::DimensionMismatch { expected: n, got: m.len() });
        }
        for (o, v) in out.iter_mut().zip(m.iter()) {
            *o += w * v;
        }
    }
    Ok(out)
}

/// `sigma' = sum_i w_i sigma_i / d` with `d` chosen by `normalizer`.
pub fn recombine_sigma(
    ranked_sigmas: &[f64],
    weights: &OuterWeights,
    normalizer: Normalizer,
) -> Result<f64, MetaError> {
    let mu = weights.mu_prime();
    if ranked_sigmas.len() != mu {
        return Err(MetaError::CountMismatch { expected: mu, got: ranked_sigmas.len() });
    }
    if let Some(&bad) = ranked_sigmas.iter().find(|s| !(**s > 0.0)) {
        return Err(MetaError::NonPositiveSigma(bad));
    }
    let sum: f64 = ranked_sigmas.iter().zip(weights.weights()).map(|(s, w)| w * s).sum();
    Ok(sum / weights.denominator(normalizer))
}

/// `sigma ~ U(0.3 sigma', 3.3 sigma')`
pub fn mutate_sigma<R: Rng + ?Sized>(sigma_prime: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    sigma_prime * (MUTATION_LOW + (MUTATION_HIGH - MUTATION_LOW) * u)
}

/// `sigma ~ U(eps, sigma_max)` with `eps = 1e-12 sigma_max`, never zero.
pub fn sample_sigma_uniform<R: Rng + ?Sized>(sigma_max: f64, rng: &mut R) -> f64 {
    let eps = 1e-12 * sigma_max;
    let u: f64 = rng.random();
    eps + (sigma_max - eps) * u
}

/// Integer uniform on `[lo, hi]`.
pub fn sample_ne<R: Rng + ?Sized>(lo: usize, hi: usize, rng: &mut R) -> usize {
    rng.random_range(lo..=hi)
}

/// Merges the elitists' newest paths into one pool aligned at the newest end.
///
/// With `k_i = min(ne_i, |P_i|)` and `K = max k_i`, the merged pool has `K`
/// slots initialised to zero; pool `i` adds `w_i / d` times its newest `k_i`
/// paths into the last `k_i` slots. Stamps become `1..=K`.
pub fn recombine_paths(
    ranked_pools: &[&PathPool],
    ne_list: &[usize],
    weights: &OuterWeights,
    normalizer: Normalizer,
) -> Result<PathPool, MetaError> {
    let mu = weights.mu_prime();
    if ranked_pools.len() != mu {
        return Err(MetaError::CountMismatch { expected: mu, got: ranked_pools.len() });
    }
    if ne_list.len() != mu {
        return Err(MetaError::CountMismatch { expected: mu, got: ne_list.len() });
    }
    let taken: Vec<&[Vec<f64>]> = ranked_pools.iter().zip(ne_list).map(|(p, &ne)| p.newest(ne)).collect();
    let slots = taken.iter().map(|t| t.len()).max().unwrap_or(0);
    let Some(n) = taken.iter().flat_map(|t| t.iter()).map(|p| p.len()).next() else {
        return Ok(PathPool::from_paths(Vec::new()));
    };
    let denom = weights.denominator(normalizer);
    let mut merged = vec![vec![0.0; n]; slots];
    for (paths, w) in taken.iter().zip(weights.weights()) {
        let coef = w / denom;
        let offset = slots - paths.len();
        for (slot, p) in merged[offset..].iter_mut().zip(paths.iter()) {
            if p.len() != n {
                return Err(MetaError::DimensionMismatch { expected: n, got: p.len() });
            }
            for (s, v) in slot.iter_mut().zip(p) {
                *s += coef * v;
            }
        }
    }
    Ok(PathPool::from_paths(merged))
}
