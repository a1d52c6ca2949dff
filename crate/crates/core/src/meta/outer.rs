use alloc::vec::Vec;

use rand::Rng;

use super::recombine::{mutate_sigma, rank_inner, recombine_means, recombine_paths, recombine_sigma, sample_ne, sample_sigma_uniform};
use super::{mutated_count, Branch, MetaError, Normalizer, OuterWeights};
use crate::lmcma::{InnerConfig, InnerResult, PathPool};
use crate::seed::derive_seed;

/// Static configuration of the outer-ES.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterSettings {
    pub lambda_prime: usize,
    pub mu_prime: usize,
    pub sigma_max: f64,
    pub ne_min: usize,
    pub ne_max: usize,
    pub normalizer: Normalizer,
    /// Initialisation box, used when stagnation re-planning draws new means.
    pub init_low: f64,
    pub init_high: f64,
    /// Re-draw fresh means after this many epochs without improvement.
    pub stagnation_epochs: Option<u32>,
    pub master_seed: u64,
}

impl OuterSettings {
    pub fn validate(&self) -> Result<(), MetaError> {
        if self.mu_prime == 0 || self.mu_prime > self.lambda_prime {
            return Err(MetaError::InvalidConfig("need 1 <= mu' <= lambda'"));
        }
        if !(self.sigma_max > 0.0 && self.sigma_max.is_finite()) {
            return Err(MetaError::InvalidConfig("sigma_max must be positive and finite"));
        }
        if self.ne_min == 0 || self.ne_min > self.ne_max {
            return Err(MetaError::InvalidConfig("need 1 <= ne_min <= ne_max"));
        }
        if !(self.init_low < self.init_high) {
            return Err(MetaError::InvalidConfig("initialisation box is empty"));
        }
        if self.stagnation_epochs == Some(0) {
            return Err(MetaError::InvalidConfig("stagnation window must be positive"));
        }
        Ok(())
    }
}

/// Outer-ES state carried between epochs by the coordinator.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterState {
    settings: OuterSettings,
    weights: OuterWeights,
    m_prime: Vec<f64>,
    sigma_prime: f64,
    pooled: PathPool,
    best_x: Vec<f64>,
    best_f: f64,
    epoch: u64,
    stagnant: u32,
}

impl OuterState {
    pub fn new(settings: OuterSettings, initial_mean: Vec<f64>, initial_sigma: f64) -> Result<Self, MetaError> {
        settings.validate()?;
        if !(initial_sigma > 0.0 && initial_sigma <= settings.sigma_max) {
            return Err(MetaError::InvalidConfig("initial sigma must lie in (0, sigma_max]"));
        }
        let weights = OuterWeights::log_rank(settings.mu_prime, settings.lambda_prime)?;
        Ok(Self {
            settings,
            weights,
            best_x: initial_mean.clone(),
            best_f: f64::INFINITY,
            m_prime: initial_mean,
            sigma_prime: initial_sigma,
            pooled: PathPool::new(0),
            epoch: 0,
            stagnant: 0,
        })
    }

    pub fn settings(&self) -> &OuterSettings {
        &self.settings
    }

    pub fn weights(&self) -> &OuterWeights {
        &self.weights
    }

    pub fn m_prime(&self) -> &[f64] {
        &self.m_prime
    }

    pub fn sigma_prime(&self) -> f64 {
        self.sigma_prime
    }

    pub fn pooled(&self) -> &PathPool {
        &self.pooled
    }

    pub fn best(&self) -> (&[f64], f64) {
        (&self.best_x, self.best_f)
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Offers a point to the best-so-far record; kept only if strictly better.
    pub fn offer_best(&mut self, x: &[f64], f: f64) -> bool {
        if f.is_finite() && f < self.best_f {
            self.best_f = f;
            self.best_x = x.to_vec();
            true
        } else {
            false
        }
    }

    /// Plans the `lambda'` inner configurations of round `round`.
    ///
    /// With no survivors (first epoch) every configuration starts from `m'`
    /// with a uniform step-size, a sampled `ne` and an empty pool. Otherwise the
    /// first `mu'` resume the survivors, the next `ceil((lambda' - mu') / 5)`
    /// mutate `sigma'`, and the rest sample `sigma` uniformly; fresh ones share
    /// `m'` and `P'`. Seeds come from `derive_seed(master, round, index)`.
    pub fn plan_epoch<R: Rng + ?Sized>(
        &self,
        round: u64,
        rng: &mut R,
        survivors: &[InnerResult],
    ) -> Result<Vec<InnerConfig>, MetaError> {
        let s = &self.settings;
        if s.lambda_prime <= s.mu_prime {
            return Err(MetaError::InvalidConfig("planning needs lambda' > mu'"));
        }
        let first = survivors.is_empty();
        if !first && survivors.len() != s.mu_prime {
            return Err(MetaError::CountMismatch { expected: s.mu_prime, got: survivors.len() });
        }
        let restart = s.stagnation_epochs.is_some_and(|w| self.stagnant > 0 && self.stagnant.is_multiple_of(w));
        let n_cont = if first { 0 } else { s.mu_prime };
        let n_mut = if first { 0 } else { mutated_count(s.lambda_prime, s.mu_prime) };
        let seed = |i: usize| derive_seed(s.master_seed, round, i as u64);

        let mut configs = Vec::with_capacity(s.lambda_prime);
        for (i, r) in survivors.iter().enumerate() {
            configs.push(InnerConfig {
                mean: r.mean.clone(),
                sigma: r.sigma,
                pool: r.pool.clone(),
                path: Some(r.path.clone()),
                ne: r.ne,
                seed: seed(i),
                branch: Branch::Continuation,
            });
        }
        for i in n_cont..s.lambda_prime {
            let (branch, sigma) = if i < n_cont + n_mut {
                (Branch::Mutated, mutate_sigma(self.sigma_prime, rng))
            } else {
                (Branch::Uniform, sample_sigma_uniform(s.sigma_max, rng))
            };
            let ne = sample_ne(s.ne_min, s.ne_max, rng);
            let mean = if restart {
                (0..self.m_prime.len()).map(|_| rng.random_range(s.init_low..s.init_high)).collect()
            } else {
                self.m_prime.clone()
            };
            let pool = if first { PathPool::new(ne) } else { self.pooled.clone() };
            configs.push(InnerConfig { mean, sigma, pool, path: None, ne, seed: seed(i), branch });
        }
        Ok(configs)
    }

    /// Absorbs one epoch's results and returns the elitist survivors.
    ///
    /// On error the state is left unchanged.
    pub fn absorb_epoch(&mut self, results: Vec<InnerResult>) -> Result<Vec<InnerResult>, MetaError> {
        let s = &self.settings;
        if results.len() != s.lambda_prime {
            return Err(MetaError::CountMismatch { expected: s.lambda_prime, got: results.len() });
        }
        let order = rank_inner(&results)?;
        let top = &order[..s.mu_prime];

        let means: Vec<&[f64]> = top.iter().map(|&i| results[i].mean.as_slice()).collect();
        let sigmas: Vec<f64> = top.iter().map(|&i| results[i].sigma).collect();
        let pools: Vec<&PathPool> = top.iter().map(|&i| &results[i].pool).collect();
        let nes: Vec<usize> = top.iter().map(|&i| results[i].ne).collect();

        let m_prime = recombine_means(&means, &self.weights)?;
        let sigma_prime = recombine_sigma(&sigmas, &self.weights, s.normalizer)?.min(s.sigma_max);
        let pooled = recombine_paths(&pools, &nes, &self.weights, s.normalizer)?;

        self.m_prime = m_prime;
        self.sigma_prime = sigma_prime;
        self.pooled = pooled;
        let mut improved = false;
        for r in &results {
            improved |= self.offer_best(&r.x_star, r.f_star);
        }
        self.stagnant = if improved { 0 } else { self.stagnant + 1 };
        self.epoch += 1;

        let mut slots: Vec<Option<InnerResult>> = results.into_iter().map(Some).collect();
        Ok(top.iter().map(|&i| slots[i].take().unwrap()).collect())
    }
}
