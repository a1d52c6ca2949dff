//! The outer-ES: ranks inner results, recombines means, step-sizes and path
//! pools of the elitists, and plans the next epoch's inner configurations.

mod outer;
mod recombine;

pub use outer::{OuterSettings, OuterState};
pub use recombine::{
    mutate_sigma, rank_inner, recombine_means, recombine_paths, recombine_sigma, sample_ne, sample_sigma_uniform,
    MUTATION_HIGH, MUTATION_LOW,
};

use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetaError {
    #[error("invalid outer configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("no inner result has a finite cost")]
    FailedEpoch,
    #[error("expected {expected} items, got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("vector of length {got} where {expected} was expected")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("step-size {0} is not positive")]
    NonPositiveSigma(f64),
}

/// Which rule produced an inner configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Elitist survivor resuming its own state.
    Continuation,
    /// Fresh start with `sigma ~ U(0.3 sigma', 3.3 sigma')`.
    Mutated,
    /// Fresh start with `sigma ~ U(0, sigma_max)`.
    Uniform,
}

/// Denominator applied to weighted sums of step-sizes and paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalizer {
    /// `sqrt(sum w)`, which is 1 for normalised weights.
    #[default]
    Literal,
    /// `sqrt(sum w^2)`.
    Variance,
}

/// Positive, decreasing outer recombination weights that sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterWeights {
    mu_prime: usize,
    lambda_prime: usize,
    w: Vec<f64>,
}

impl OuterWeights {
    /// Log-rank weights `w_i ~ ln(mu' + 1) - ln(i)`, normalised.
    pub fn log_rank(mu_prime: usize, lambda_prime: usize) -> Result<Self, MetaError> {
        if mu_prime == 0 || mu_prime > lambda_prime {
            return Err(MetaError::InvalidConfig("need 1 <= mu' <= lambda'"));
        }
        let raw: Vec<f64> =
            (1..=mu_prime).map(|i| libm::log(mu_prime as f64 + 1.0) - libm::log(i as f64)).collect();
        let total: f64 = raw.iter().sum();
        Ok(Self { mu_prime, lambda_prime, w: raw.into_iter().map(|x| x / total).collect() })
    }

    /// Explicit weights; must be positive, non-increasing and sum to one.
    pub fn from_weights(w: Vec<f64>, lambda_prime: usize) -> Result<Self, MetaError> {
        let mu_prime = w.len();
        if mu_prime == 0 || mu_prime > lambda_prime {
            return Err(MetaError::InvalidConfig("need 1 <= mu' <= lambda'"));
        }
        if w.iter().any(|x| !(*x > 0.0)) || w.windows(2).any(|p| p[0] < p[1]) {
            return Err(MetaError::InvalidConfig("weights must be positive and non-increasing"));
        }
        if (w.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(MetaError::InvalidConfig("weights must sum to one"));
        }
        Ok(Self { mu_prime, lambda_prime, w })
    }

    pub fn mu_prime(&self) -> usize {
        self.mu_prime
    }

    pub fn lambda_prime(&self) -> usize {
        self.lambda_prime
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn denominator(&self, normalizer: Normalizer) -> f64 {
        match normalizer {
            Normalizer::Literal => libm::sqrt(self.w.iter().sum::<f64>()),
            Normalizer::Variance => libm::sqrt(self.w.iter().map(|x| x * x).sum::<f64>()),
        }
    }
}

/// Default elitist count, `max(1, ceil(lambda' / 5))`.
pub fn default_mu_prime(lambda_prime: usize) -> usize {
    lambda_prime.div_ceil(5).max(1)
}

/// Number of Meta-ES mutated configurations, `ceil((lambda' - mu') / 5)`.
pub fn mutated_count(lambda_prime: usize, mu_prime: usize) -> usize {
    lambda_prime.saturating_sub(mu_prime).div_ceil(5)
}
