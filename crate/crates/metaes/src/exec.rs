//! Parallel execution of inner runs and the top-level meta loop.
//!
//! The coordinator owns the [`OuterState`]; each epoch's `lambda'` inner runs
//! are farmed out to a bounded rayon pool and collected back in config order,
//! so results never depend on which worker ran what or when it finished.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use metaes_core::lmcma::GenerationRecord;
use metaes_core::meta::MetaError;
use metaes_core::{
    derive_seed, run_inner, run_inner_observed, Branch, Clock, EvalError, InnerConfig, InnerError, InnerResult,
    InnerSettings, IsolationBudget, Objective, OuterSettings, OuterState, PathPool, RunLimits,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Seed stream index reserved for the outer planner's own draws.
const PLAN_STREAM: u64 = u64::MAX;
/// Abort after this many consecutive epochs in which every worker failed.
const MAX_FAILED_EPOCHS: u64 = 16;

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Meta(#[from] MetaError),
    #[error(transparent)]
    Inner(#[from] InnerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("{0} consecutive epochs failed on every worker")]
    TooManyFailures(u64),
}

/// Seconds since construction.
#[derive(Debug, Clone, Copy)]
pub struct WallClock {
    start: Instant,
}

impl WallClock {
    pub fn start() -> Self {
        Self { start: Instant::now() }
    }
}

impl Clock for WallClock {
    fn now_secs(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

/// Executes one inner configuration. Implementations must be deterministic
/// in `(index, cfg, limits)` for reproducible budgets.
pub trait InnerRunner: Sync {
    /// Cost of a single point, used for the initial mean.
    fn evaluate(&self, x: &[f64]) -> Result<f64, EvalError>;
    fn run(&self, index: usize, cfg: &InnerConfig, limits: RunLimits) -> Result<InnerResult, InnerError>;
}

/// Runs LM-CMA on a shared objective.
pub struct LmCmaRunner<'a, O: ?Sized> {
    pub objective: &'a O,
    pub settings: InnerSettings,
    pub clock: Option<WallClock>,
}

impl<'a, O: Objective + ?Sized> LmCmaRunner<'a, O> {
    pub fn new(objective: &'a O, settings: InnerSettings) -> Self {
        Self { objective, settings, clock: None }
    }

    pub fn with_clock(mut self, clock: WallClock) -> Self {
        self.clock = Some(clock);
        self
    }
}

impl<O: Objective + ?Sized> InnerRunner for LmCmaRunner<'_, O> {
    fn evaluate(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.objective.evaluate(x)
    }

    fn run(&self, _index: usize, cfg: &InnerConfig, limits: RunLimits) -> Result<InnerResult, InnerError> {
        let clock = self.clock.as_ref().map(|c| c as &dyn Clock);
        run_inner(cfg, self.objective, &self.settings, limits, clock)
    }
}

/// A fixed-size pool of worker threads.
pub struct WorkerPool {
    pool: rayon::ThreadPool,
}

impl WorkerPool {
    pub fn new(size: usize) -> Result<Self, ExecError> {
        if size == 0 {
            return Err(ExecError::Config("pool_size must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(size)
            .thread_name(|i| format!("metaes-worker-{i}"))
            .build()
            .map_err(|e| ExecError::Pool(e.to_string()))?;
        Ok(Self { pool })
    }

    pub fn size(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Runs every config and returns the results in config order.
    ///
    /// A worker that errors or panics yields [`InnerResult::failed_from`] for
    /// its slot; the other slots are unaffected.
    pub fn run_epoch<R: InnerRunner + ?Sized>(
        &self,
        configs: &[InnerConfig],
        runner: &R,
        limits: RunLimits,
    ) -> Vec<InnerResult> {
        self.pool.install(|| {
            configs
                .par_iter()
                .enumerate()
                .map(|(i, cfg)| match catch_unwind(AssertUnwindSafe(|| runner.run(i, cfg, limits))) {
                    Ok(Ok(r)) => r,
                    _ => InnerResult::failed_from(cfg),
                })
                .collect()
        })
    }
}

/// One-shot convenience over [`WorkerPool::run_epoch`] with an LM-CMA runner.
pub fn run_epoch_parallel<O: Objective + ?Sized>(
    configs: &[InnerConfig],
    objective: &O,
    settings: &InnerSettings,
    pool_size: usize,
    budget: IsolationBudget,
) -> Result<Vec<InnerResult>, ExecError> {
    let pool = WorkerPool::new(pool_size)?;
    let mut runner = LmCmaRunner::new(objective, settings.clone());
    if !budget.is_reproducible() {
        runner = runner.with_clock(WallClock::start());
    }
    Ok(pool.run_epoch(configs, &runner, RunLimits::new(budget)))
}

/// Overall stopping budget of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TotalBudget {
    Evaluations(u64),
    WallClockSeconds(f64),
}

/// Best cost achieved by each planning branch in one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BranchBest {
    pub continuation: Option<f64>,
    pub mutated: Option<f64>,
    pub uniform: Option<f64>,
}

impl BranchBest {
    fn from_results(results: &[InnerResult]) -> Self {
        let best = |b: Branch| {
            results
                .iter()
                .filter(|r| r.branch == b && !r.failed && r.f_star.is_finite())
                .map(|r| r.f_star)
                .min_by(f64::total_cmp)
        };
        Self {
            continuation: best(Branch::Continuation),
            mutated: best(Branch::Mutated),
            uniform: best(Branch::Uniform),
        }
    }
}

/// One row of the convergence log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: u64,
    /// Cumulative evaluations, including the initial mean.
    pub evals: u64,
    /// Seconds since the run started; zero when wall time is not recorded.
    pub wall_s: f64,
    pub best_f: f64,
    pub sigma_prime: f64,
    pub branch_best: BranchBest,
    pub failed_slots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Threshold,
    Budget,
    /// Inner engine could not continue (serial runs only).
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub records: Vec<EpochRecord>,
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub total_evals: u64,
    pub wall_seconds: f64,
    pub failed_epochs: u64,
    pub stop: StopReason,
}

impl RunReport {
    /// Everything except measured wall time.
    pub fn same_outcome(&self, other: &RunReport) -> bool {
        let strip = |r: &RunReport| r.records.iter().map(|e| EpochRecord { wall_s: 0.0, ..e.clone() }).collect::<Vec<_>>();
        strip(self) == strip(other)
            && self.best_x == other.best_x
            && self.best_f.to_bits() == other.best_f.to_bits()
            && self.total_evals == other.total_evals
            && self.failed_epochs == other.failed_epochs
            && self.stop == other.stop
    }
}

/// Settings of a distributed run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaRun {
    pub outer: OuterSettings,
    pub inner: InnerSettings,
    pub initial_mean: Vec<f64>,
    pub sigma0: f64,
    pub isolation: IsolationBudget,
    pub total: TotalBudget,
    pub threshold: f64,
    pub pool_size: usize,
    /// Write measured seconds into the records; off keeps traces byte-identical.
    pub record_wall_time: bool,
}

/// Runs the outer loop with LM-CMA inner engines on `objective`.
pub fn run_meta<O: Objective + ?Sized>(run: &MetaRun, objective: &O) -> Result<RunReport, ExecError> {
    let runner = LmCmaRunner::new(objective, run.inner.clone()).with_clock(WallClock::start());
    run_meta_with(run, &runner)
}

/// Plan, run in parallel, absorb; repeat until the total budget or the cost
/// threshold is reached.
pub fn run_meta_with<R: InnerRunner + ?Sized>(run: &MetaRun, runner: &R) -> Result<RunReport, ExecError> {
    let clock = WallClock::start();
    if !run.isolation.is_positive() {
        return Err(ExecError::Config("isolation budget must be positive".into()));
    }
    if run.outer.lambda_prime <= run.outer.mu_prime {
        return Err(ExecError::Config("lambda_prime must exceed mu_prime".into()));
    }
    let pool = WorkerPool::new(run.pool_size)?;
    let mut state = OuterState::new(run.outer.clone(), run.initial_mean.clone(), run.sigma0)?;
    let master = run.outer.master_seed;

    let f0 = runner.evaluate(&run.initial_mean)?;
    state.offer_best(&run.initial_mean, f0);
    let mut used: u64 = 1;
    let mut records = Vec::new();
    let mut survivors: Vec<InnerResult> = Vec::new();
    let mut failed_epochs = 0u64;
    let mut failed_streak = 0u64;
    let lambda_inner = run.inner.lambda.unwrap_or(metaes_core::lmcma::DEFAULT_LAMBDA) as u64;
    let lambda_prime = run.outer.lambda_prime as u64;

    let stop = loop {
        if state.best().1 <= run.threshold {
            break StopReason::Threshold;
        }
        let remaining = match run.total {
            TotalBudget::Evaluations(b) if used >= b => break StopReason::Budget,
            TotalBudget::Evaluations(b) => Some(b - used),
            TotalBudget::WallClockSeconds(s) if clock.now_secs() >= s => break StopReason::Budget,
            TotalBudget::WallClockSeconds(_) => None,
        };
        let isolation = match (run.isolation, remaining) {
            (IsolationBudget::MaxEvaluations(t), Some(rem)) => {
                IsolationBudget::MaxEvaluations(t.min(rem.div_ceil(lambda_prime)))
            }
            (IsolationBudget::MaxGenerations(g), Some(rem)) => {
                IsolationBudget::MaxGenerations(g.min(rem.div_ceil(lambda_prime * lambda_inner)))
            }
            (other, _) => other,
        };
        let limits = RunLimits::new(isolation).with_target(run.threshold);

        let round = records.len() as u64 + failed_epochs;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master, round, PLAN_STREAM));
        let configs = state.plan_epoch(round, &mut rng, &survivors)?;
        let results = pool.run_epoch(&configs, runner, limits);
        let spent: u64 = results.iter().map(|r| r.evals).sum();
        let failed_slots = results.iter().filter(|r| r.failed).count();
        let branch_best = BranchBest::from_results(&results);

        match state.absorb_epoch(results) {
            Ok(next) => {
                survivors = next;
                failed_streak = 0;
                used += spent;
                records.push(EpochRecord {
                    epoch: state.epoch() - 1,
                    evals: used,
                    wall_s: if run.record_wall_time { clock.now_secs() } else { 0.0 },
                    best_f: state.best().1,
                    sigma_prime: state.sigma_prime(),
                    branch_best,
                    failed_slots,
                });
            }
            Err(MetaError::FailedEpoch) => {
                failed_epochs += 1;
                failed_streak += 1;
                used += spent;
                if failed_streak >= MAX_FAILED_EPOCHS {
                    return Err(ExecError::TooManyFailures(failed_streak));
                }
            }
            Err(e) => return Err(e.into()),
        }
    };

    let (best_x, best_f) = state.best();
    Ok(RunReport {
        records,
        best_x: best_x.to_vec(),
        best_f,
        total_evals: used,
        wall_seconds: clock.now_secs(),
        failed_epochs,
        stop,
    })
}

/// Settings of a single serial LM-CMA run.
#[derive(Debug, Clone, PartialEq)]
pub struct SerialRun {
    pub inner: InnerSettings,
    pub initial_mean: Vec<f64>,
    pub sigma0: f64,
    pub ne: usize,
    pub total: TotalBudget,
    pub threshold: f64,
    pub seed: u64,
    pub record_wall_time: bool,
}

/// Serial LM-CMA with the whole budget; one record per generation.
pub fn run_serial<O: Objective + ?Sized>(run: &SerialRun, objective: &O) -> Result<RunReport, ExecError> {
    let clock = WallClock::start();
    let budget = match run.total {
        TotalBudget::Evaluations(b) => IsolationBudget::MaxEvaluations(b),
        TotalBudget::WallClockSeconds(s) => IsolationBudget::WallClockSeconds(s),
    };
    let cfg = InnerConfig {
        mean: run.initial_mean.clone(),
        sigma: run.sigma0,
        pool: PathPool::new(run.ne),
        path: None,
        ne: run.ne,
        seed: derive_seed(run.seed, 0, 0),
        branch: Branch::Uniform,
    };
    let mut records = Vec::new();
    let mut observe = |g: &GenerationRecord| {
        records.push(EpochRecord {
            epoch: g.generation,
            evals: g.evals,
            wall_s: if run.record_wall_time { clock.now_secs() } else { 0.0 },
            best_f: g.best_f,
            sigma_prime: g.sigma,
            branch_best: BranchBest::default(),
            failed_slots: 0,
        });
    };
    let limits = RunLimits::new(budget).with_target(run.threshold);
    let result = run_inner_observed(&cfg, objective, &run.inner, limits, Some(&clock), &mut observe)?;
    let stop = if result.f_star <= run.threshold {
        StopReason::Threshold
    } else if !(result.sigma > 0.0 && result.sigma.is_finite()) {
        StopReason::Degenerate
    } else {
        StopReason::Budget
    };
    Ok(RunReport {
        records,
        best_x: result.x_star,
        best_f: result.f_star,
        total_evals: result.evals,
        wall_seconds: clock.now_secs(),
        failed_epochs: 0,
        stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use metaes_core::{make_objective, BaseFunction, Normalizer};

    fn meta_run(n: usize, seed: u64) -> MetaRun {
        MetaRun {
            outer: OuterSettings {
                lambda_prime: 6,
                mu_prime: 2,
                sigma_max: 4.0,
                ne_min: 2,
                ne_max: 6,
                normalizer: Normalizer::Literal,
                init_low: -5.0,
                init_high: 5.0,
                stagnation_epochs: None,
                master_seed: seed,
            },
            inner: InnerSettings::default(),
            initial_mean: vec![3.0; n],
            sigma0: 2.0,
            isolation: IsolationBudget::MaxEvaluations(200),
            total: TotalBudget::Evaluations(5_000),
            threshold: 1e-10,
            pool_size: 2,
            record_wall_time: false,
        }
    }

    #[test]
    fn zero_pool_is_rejected() {
        assert!(WorkerPool::new(0).is_err());
    }

    #[test]
    fn budget_zero_slot_echoes_config() {
        let obj = make_objective(BaseFunction::Sphere, 4, 1).unwrap();
        let cfg = InnerConfig {
            mean: vec![1.0; 4],
            sigma: 0.5,
            pool: PathPool::new(2),
            path: None,
            ne: 2,
            seed: 1,
            branch: Branch::Mutated,
        };
        let out =
            run_epoch_parallel(std::slice::from_ref(&cfg), &obj, &InnerSettings::default(), 2, IsolationBudget::MaxEvaluations(0))
                .unwrap();
        assert_eq!(out[0].mean, cfg.mean);
        assert_eq!(out[0].sigma, cfg.sigma);
        assert!(!out[0].failed);
    }

    #[test]
    fn threshold_met_by_initial_mean() {
        let obj = make_objective(BaseFunction::Sphere, 4, 1).unwrap();
        let mut run = meta_run(4, 1);
        run.initial_mean = obj.shift().to_vec();
        let report = run_meta(&run, &obj).unwrap();
        assert!(report.records.is_empty());
        assert_eq!(report.best_f, 0.0);
        assert_eq!(report.stop, StopReason::Threshold);
        assert_eq!(report.total_evals, 1);
    }

    #[test]
    fn budget_accounting_and_monotone_best() {
        let obj = make_objective(BaseFunction::Rastrigin, 8, 2).unwrap();
        let run = meta_run(8, 4);
        let report = run_meta(&run, &obj).unwrap();
        assert!(report.total_evals <= 5_000 + 6 * 19);
        assert_eq!(report.total_evals, obj.evaluations());
        assert!(report.records.windows(2).all(|w| w[1].best_f <= w[0].best_f && w[1].evals > w[0].evals));
        assert!(report.records.iter().all(|r| r.wall_s == 0.0));
    }

    #[test]
    fn serial_run_logs_every_generation() {
        let obj = make_objective(BaseFunction::Sphere, 6, 1).unwrap();
        let run = SerialRun {
            inner: InnerSettings::default(),
            initial_mean: vec![1.0; 6],
            sigma0: 1.0,
            ne: 4,
            total: TotalBudget::Evaluations(400),
            threshold: 1e-10,
            seed: 3,
            record_wall_time: false,
        };
        let report = run_serial(&run, &obj).unwrap();
        assert_eq!(report.records.len() as u64, (report.total_evals - 1) / 19);
        assert_eq!(report.records[0].epoch, 0);
        assert_eq!(report.stop, StopReason::Budget);
    }

    #[test]
    fn invalid_shapes_abort_before_epoch_zero() {
        let obj = make_objective(BaseFunction::Sphere, 4, 1).unwrap();
        let mut run = meta_run(4, 1);
        run.outer.mu_prime = 6;
        assert!(matches!(run_meta(&run, &obj), Err(ExecError::Config(_))));
        assert_eq!(obj.evaluations(), 0);
        let mut run = meta_run(4, 1);
        run.isolation = IsolationBudget::MaxEvaluations(0);
        assert!(run_meta(&run, &obj).is_err());
    }
}
