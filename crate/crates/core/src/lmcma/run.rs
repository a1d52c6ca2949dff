use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{InnerError, InnerSettings, LmCmaParams, LmCmaState, PathPool};
use crate::benchfuncs::Objective;
use crate::budget::{Clock, IsolationBudget, RunLimits};
use crate::meta::Branch;

/// Everything one inner engine needs to start an isolation epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerConfig {
    pub mean: Vec<f64>,
    pub sigma: f64,
    pub pool: PathPool,
    /// Evolution path to resume from; `None` starts at zero.
    pub path: Option<Vec<f64>>,
    pub ne: usize,
    pub seed: u64,
    pub branch: Branch,
}

impl InnerConfig {
    pub fn is_continuation(&self) -> bool {
        self.branch == Branch::Continuation
    }
}

/// What an inner engine hands back at the end of its isolation epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub mean: Vec<f64>,
    pub sigma: f64,
    pub pool: PathPool,
    pub path: Vec<f64>,
    pub x_star: Vec<f64>,
    pub f_star: f64,
    pub evals: u64,
    pub generations: u64,
    pub ne: usize,
    pub branch: Branch,
    /// Set when the worker failed; `f_star` is then `+inf`.
    pub failed: bool,
}

impl InnerResult {
    /// Failure sentinel echoing the configuration it was started from.
    pub fn failed_from(cfg: &InnerConfig) -> Self {
        Self {
            mean: cfg.mean.clone(),
            sigma: cfg.sigma,
            pool: cfg.pool.clone(),
            path: cfg.path.clone().unwrap_or_else(|| alloc::vec![0.0; cfg.mean.len()]),
            x_star: cfg.mean.clone(),
            f_star: f64::INFINITY,
            evals: 0,
            generations: 0,
            ne: cfg.ne,
            branch: cfg.branch,
            failed: true,
        }
    }
}

/// Per-generation progress reported to an observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationRecord {
    pub generation: u64,
    pub evals: u64,
    pub best_f: f64,
    pub sigma: f64,
}

/// Runs one inner engine until its budget is spent (or the target is hit).
///
/// The initial mean is evaluated first and counts towards both the budget and
/// the best-so-far record, so a zero budget returns the configuration with
/// `f_star = cost(mean)`.
pub fn run_inner<O: Objective + ?Sized>(
    cfg: &InnerConfig,
    objective: &O,
    settings: &InnerSettings,
    limits: RunLimits,
    clock: Option<&dyn Clock>,
) -> Result<InnerResult, InnerError> {
    run_inner_observed(cfg, objective, settings, limits, clock, &mut |_| {})
}

pub fn run_inner_observed<O: Objective + ?Sized>(
    cfg: &InnerConfig,
    objective: &O,
    settings: &InnerSettings,
    limits: RunLimits,
    clock: Option<&dyn Clock>,
    observer: &mut dyn FnMut(&GenerationRecord),
) -> Result<InnerResult, InnerError> {
    let n = objective.dim();
    let params = LmCmaParams::new(n, cfg.ne, settings)?;
    let mut state = LmCmaState::new(params, cfg.mean.clone(), cfg.sigma, cfg.pool.clone(), cfg.path.clone())?;
    let start = match (limits.budget, clock) {
        (IsolationBudget::WallClockSeconds(_), None) => return Err(InnerError::MissingClock),
        (_, Some(c)) => c.now_secs(),
        (_, None) => 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut f_star = objective.evaluate(&cfg.mean)?;
    let mut x_star = cfg.mean.clone();
    if !f_star.is_finite() {
        f_star = f64::INFINITY;
    }
    let mut evals: u64 = 1;
    let mut generations: u64 = 0;

    loop {
        let spent = match limits.budget {
            IsolationBudget::MaxEvaluations(b) => evals >= b,
            IsolationBudget::MaxGenerations(g) => generations >= g,
            IsolationBudget::WallClockSeconds(s) => clock.is_some_and(|c| c.now_secs() - start >= s),
        };
        if spent || limits.target.is_some_and(|t| f_star <= t) {
            break;
        }
        if !(state.sigma() > 0.0 && state.sigma().is_finite()) {
            break;
        }
        let population = state.ask(&mut rng);
        let mut costs = Vec::with_capacity(population.candidates.len());
        for x in &population.candidates {
            let c = objective.evaluate(x)?;
            evals += 1;
            if c < f_star {
                f_star = c;
                x_star.clone_from(x);
            }
            costs.push(c);
        }
        generations += 1;
        match state.tell(&population, &costs) {
            Ok(()) | Err(InnerError::AllCostsNonFinite) => {}
            Err(e) => return Err(e),
        }
        observer(&GenerationRecord { generation: generations - 1, evals, best_f: f_star, sigma: state.sigma() });
    }

    let (mean, sigma, pool, path) = state.into_parts();
    Ok(InnerResult {
        mean,
        sigma,
        pool,
        path,
        x_star,
        f_star,
        evals,
        generations,
        ne: cfg.ne,
        branch: cfg.branch,
        failed: false,
    })
}
