//! Serial limited-memory CMA-ES used as the inner engine.
//!
//! Candidates are `x = m + sigma * A z` where `A` is the product of rank-one
//! factors `(1 - c1/2) I + (c1/2) p p^T`, one per stored evolution path `p`,
//! applied to `z` from the newest path to the oldest in `O(ne * n)`. Only the
//! rank-one part of the covariance update is kept. The evolution path
//! accumulates the weighted raw draws `sum w_i z_{i:lambda}`, i.e. it lives in
//! the coordinates the factors act on. The step-size follows the population
//! success rule.

mod pool;
mod run;

pub use pool::PathPool;
pub use run::{run_inner, run_inner_observed, GenerationRecord, InnerConfig, InnerResult};

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::benchfuncs::EvalError;
use crate::linalg::{axpy, dot};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InnerError {
    #[error("invalid inner configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("every candidate cost was non-finite; state left unchanged")]
    AllCostsNonFinite,
    #[error("wall-clock budget requires a clock")]
    MissingClock,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// User-facing overrides for the inner engine. `None` picks the default.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSettings {
    /// Offspring per generation (default 19).
    pub lambda: Option<usize>,
    /// Rank-one coefficient (default `1 / (10 ln(n + 1))`).
    pub c1: Option<f64>,
    /// Path cumulation coefficient (default `0.5 / sqrt(n)`).
    pub cc: Option<f64>,
    /// Generations between stored paths (default `ceil(n / ne)`).
    pub store_gap: Option<u64>,
    /// Adjacent-stamp spread at which eviction switches to oldest-first (default `n`).
    pub eviction_span: Option<u64>,
    /// Target success `z*` of the population success rule.
    pub target_success: f64,
    /// Damping `d_sigma` of the population success rule.
    pub damping: f64,
    /// Exponential smoothing of the success measure; 1 means none.
    pub success_smoothing: f64,
}

impl Default for InnerSettings {
    fn default() -> Self {
        Self {
            lambda: None,
            c1: None,
            cc: None,
            store_gap: None,
            eviction_span: None,
            target_success: 0.25,
            damping: 1.0,
            success_smoothing: 1.0,
        }
    }
}

pub const DEFAULT_LAMBDA: usize = 19;

/// Default number of reconstruction paths for a serial run, `floor(4 + 3 ln n)`.
pub fn default_ne(n: usize) -> usize {
    (4.0 + 3.0 * libm::log(n as f64)) as usize
}

/// Resolved strategy constants for one dimension and path count.
#[derive(Debug, Clone, PartialEq)]
pub struct LmCmaParams {
    pub n: usize,
    pub ne: usize,
    pub lambda: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c1: f64,
    pub cc: f64,
    pub store_gap: u64,
    pub eviction_span: u64,
    pub target_success: f64,
    pub damping: f64,
    pub success_smoothing: f64,
}

impl LmCmaParams {
    pub fn new(n: usize, ne: usize, settings: &InnerSettings) -> Result<Self, InnerError> {
        if n == 0 {
            return Err(InnerError::InvalidConfig("dimension must be positive"));
        }
        if ne == 0 {
            return Err(InnerError::InvalidConfig("ne must be at least 1"));
        }
        let lambda = settings.lambda.unwrap_or(DEFAULT_LAMBDA);
        if lambda < 2 {
            return Err(InnerError::InvalidConfig("lambda must be at least 2"));
        }
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu).map(|i| libm::log(mu as f64 + 1.0) - libm::log(i as f64)).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let nf = n as f64;
        let c1 = settings.c1.unwrap_or(1.0 / (10.0 * libm::log(nf + 1.0)));
        let cc = settings.cc.unwrap_or(0.5 / libm::sqrt(nf));
        if !(c1 > 0.0 && c1 < 1.0) {
            return Err(InnerError::InvalidConfig("c1 must lie in (0, 1)"));
        }
        if !(cc > 0.0 && cc <= 1.0) {
            return Err(InnerError::InvalidConfig("cc must lie in (0, 1]"));
        }
        let store_gap = settings.store_gap.unwrap_or(n.div_ceil(ne) as u64);
        if store_gap == 0 {
            return Err(InnerError::InvalidConfig("store gap must be at least 1"));
        }
        if !(settings.damping > 0.0) {
            return Err(InnerError::InvalidConfig("damping must be positive"));
        }
        if !(settings.success_smoothing > 0.0 && settings.success_smoothing <= 1.0) {
            return Err(InnerError::InvalidConfig("success smoothing must lie in (0, 1]"));
        }
        Ok(Self {
            n,
            ne,
            lambda,
            mu,
            weights,
            mu_eff,
            c1,
            cc,
            store_gap,
            eviction_span: settings.eviction_span.unwrap_or(n as u64),
            target_success: settings.target_success,
            damping: settings.damping,
            success_smoothing: settings.success_smoothing,
        })
    }
}

/// Applies the newest `ne` rank-one factors of `pool` to `z`, newest first.
///
/// Starting from `v = z`, each path `p` (newest to oldest) does
/// `v <- (1 - c1/2) v + (c1/2) (p . v) p`. An empty pool returns `z`.
pub fn apply_reconstruction(pool: &PathPool, ne: usize, c1: f64, z: &[f64]) -> Vec<f64> {
    let mut v = z.to_vec();
    let keep = 1.0 - 0.5 * c1;
    let half = 0.5 * c1;
    for p in pool.newest(ne).iter().rev() {
        let proj = dot(p, &v);
        v.iter_mut().for_each(|x| *x *= keep);
        axpy(half * proj, p, &mut v);
    }
    v
}

/// One generation's sample: candidates and the standard-normal draws behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub candidates: Vec<Vec<f64>>,
    pub draws: Vec<Vec<f64>>,
}

/// Mutable state of one inner engine.
#[derive(Debug, Clone)]
pub struct LmCmaState {
    params: LmCmaParams,
    mean: Vec<f64>,
    sigma: f64,
    path: Vec<f64>,
    pool: PathPool,
    generation: u64,
    prev_costs: Option<Vec<f64>>,
    success: f64,
}

impl LmCmaState {
    /// Fresh state. The pool is cut to its newest `params.ne` paths and the
    /// generation counter resumes after the newest stored stamp.
    pub fn new(
        params: LmCmaParams,
        mean: Vec<f64>,
        sigma: f64,
        pool: PathPool,
        path: Option<Vec<f64>>,
    ) -> Result<Self, InnerError> {
        let n = params.n;
        if mean.len() != n {
            return Err(InnerError::LengthMismatch { expected: n, got: mean.len() });
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(InnerError::InvalidConfig("sigma must be positive and finite"));
        }
        if pool.paths().iter().any(|p| p.len() != n || p.iter().any(|v| !v.is_finite())) {
            return Err(InnerError::InvalidConfig("pool paths must be finite n-vectors"));
        }
        let path = path.unwrap_or_else(|| vec![0.0; n]);
        if path.len() != n {
            return Err(InnerError::LengthMismatch { expected: n, got: path.len() });
        }
        let pool = pool.truncated_to_newest(params.ne);
        let generation = pool.last_stamp().map_or(0, |s| s + 1);
        Ok(Self { params, mean, sigma, path, pool, generation, prev_costs: None, success: 0.0 })
    }

    pub fn params(&self) -> &LmCmaParams {
        &self.params
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn path(&self) -> &[f64] {
        &self.path
    }

    pub fn pool(&self) -> &PathPool {
        &self.pool
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub(crate) fn into_parts(self) -> (Vec<f64>, f64, PathPool, Vec<f64>) {
        (self.mean, self.sigma, self.pool, self.path)
    }

    /// Draws `lambda` candidates `m + sigma * A z_i` with `z_i ~ N(0, I)`.
    pub fn ask<R: Rng + ?Sized>(&self, rng: &mut R) -> Population {
        let n = self.params.n;
        let mut candidates = Vec::with_capacity(self.params.lambda);
        let mut draws = Vec::with_capacity(self.params.lambda);
        for _ in 0..self.params.lambda {
            let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            let d = apply_reconstruction(&self.pool, self.params.ne, self.params.c1, &z);
            let x: Vec<f64> = self.mean.iter().zip(&d).map(|(m, di)| m + self.sigma * di).collect();
            candidates.push(x);
            draws.push(z);
        }
        Population { candidates, draws }
    }

    /// Updates mean, evolution path, path pool and step-size from evaluated costs.
    ///
    /// The mean becomes the weighted recombination of the best `mu` candidates;
    /// the path is `(1 - cc) p + sqrt(cc (2 - cc) mu_eff) sum w_i z_{i:lambda}`
    /// and is stored every `store_gap` generations.
    ///
    /// Non-finite costs rank last. If every cost is non-finite the state is
    /// left untouched and [`InnerError::AllCostsNonFinite`] is returned.
    pub fn tell(&mut self, population: &Population, costs: &[f64]) -> Result<(), InnerError> {
        let lambda = self.params.lambda;
        for len in [population.candidates.len(), population.draws.len(), costs.len()] {
            if len != lambda {
                return Err(InnerError::LengthMismatch { expected: lambda, got: len });
            }
        }
        if costs.iter().all(|c| !c.is_finite()) {
            return Err(InnerError::AllCostsNonFinite);
        }
        let costs: Vec<f64> = costs.iter().map(|&c| if c.is_finite() { c } else { f64::INFINITY }).collect();

        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]));

        let n = self.params.n;
        let mut new_mean = vec![0.0; n];
        for (w, &idx) in self.params.weights.iter().zip(&order) {
            axpy(*w, &population.candidates[idx], &mut new_mean);
        }

        let p = &self.params;
        let decay = 1.0 - p.cc;
        let mut zw = vec![0.0; n];
        for (w, &idx) in p.weights.iter().zip(&order) {
            axpy(*w, &population.draws[idx], &mut zw);
        }
        let gain = libm::sqrt(p.cc * (2.0 - p.cc) * p.mu_eff);
        for (pc, z) in self.path.iter_mut().zip(&zw) {
            *pc = decay * *pc + gain * z;
        }
        self.mean = new_mean;

        let due = self.pool.last_stamp().is_none_or(|last| self.generation - last >= p.store_gap);
        if due && self.path.iter().all(|v| v.is_finite()) {
            self.pool.insert(self.generation, self.path.clone(), p.eviction_span);
        }

        if let Some(prev) = &self.prev_costs {
            let z = success_measure(&costs, prev);
            let s = p.success_smoothing;
            self.success = (1.0 - s) * self.success + s * (z - p.target_success);
            self.sigma *= libm::exp(self.success / p.damping);
        }
        self.prev_costs = Some(costs);
        self.generation += 1;
        Ok(())
    }
}

/// Normalised rank gain of `current` over `previous` in `[-1, 1]`.
///
/// Both populations are ranked jointly (ties share their mean rank) and the
/// result is `(sum of previous ranks - sum of current ranks) / lambda^2`,
/// which is zero in expectation when the ordering is random.
pub fn success_measure(current: &[f64], previous: &[f64]) -> f64 {
    let lambda = current.len();
    let merged: Vec<(f64, bool)> =
        current.iter().map(|&c| (c, true)).chain(previous.iter().map(|&c| (c, false))).collect();
    let mut order: Vec<usize> = (0..merged.len()).collect();
    order.sort_by(|&a, &b| merged[a].0.total_cmp(&merged[b].0));

    let mut rank = vec![0.0; merged.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && merged[order[end]].0 == merged[order[start]].0 {
            end += 1;
        }
        let shared = (start + end - 1) as f64 / 2.0;
        for &i in &order[start..end] {
            rank[i] = shared;
        }
        start = end;
    }
    let (mut cur, mut prev) = (0.0, 0.0);
    for (i, &(_, is_current)) in merged.iter().enumerate() {
        if is_current {
            cur += rank[i];
        } else {
            prev += rank[i];
        }
    }
    (prev - cur) / (lambda * lambda) as f64
}
