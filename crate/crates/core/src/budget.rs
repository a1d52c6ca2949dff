//! Isolation budgets for a single inner run.

/// How long an inner engine runs before reporting back to the outer level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IsolationBudget {
    /// Wall-clock seconds; not reproducible.
    WallClockSeconds(f64),
    MaxEvaluations(u64),
    MaxGenerations(u64),
}

impl IsolationBudget {
    /// Evaluation- and generation-based budgets give bit-identical runs.
    pub fn is_reproducible(&self) -> bool {
        !matches!(self, IsolationBudget::WallClockSeconds(_))
    }

    pub fn is_positive(&self) -> bool {
        match *self {
            IsolationBudget::WallClockSeconds(s) => s > 0.0 && s.is_finite(),
            IsolationBudget::MaxEvaluations(e) => e > 0,
            IsolationBudget::MaxGenerations(g) => g > 0,
        }
    }
}

/// Monotone time source in seconds, supplied by the host.
pub trait Clock: Sync {
    fn now_secs(&self) -> f64;
}

/// Budget plus an optional cost target that ends the run early.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunLimits {
    pub budget: IsolationBudget,
    pub target: Option<f64>,
}

impl RunLimits {
    pub fn new(budget: IsolationBudget) -> Self {
        Self { budget, target: None }
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target = Some(target);
        self
    }
}
