//! The thirteen benchmark functions and their rotated/shifted instances.
//!
//! An instance evaluates `f(x) = f_base(R (x - s))` where `R` is a seeded
//! orthogonal matrix and `s` a seeded shift, so that `x = s` is the optimum of
//! every unimodal function while the origin is not.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{E, PI};
use core::fmt;
use core::str::FromStr;
use core::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg::{matvec, orthogonal_factor, orthogonality_defect};

/// Shift components are drawn uniformly from `[-SHIFT_RANGE, SHIFT_RANGE]`.
pub const SHIFT_RANGE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("expected a {expected}-dimensional point, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),
    #[error("rotation matrix is not orthogonal (defect {0:e})")]
    NotOrthogonal(f64),
    #[error("unknown function id `{0}`")]
    UnknownFunction(alloc::string::String),
    #[error("objective failed: {0}")]
    Failed(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    Unimodal,
    Multimodal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseFunction {
    Sphere,
    Cigar,
    Discus,
    Ellipsoid,
    DifferentPowers,
    Schwefel221,
    Step,
    Schwefel12,
    Ackley,
    Rastrigin,
    Michalewicz,
    Salomon,
    ScaledRastrigin,
}

impl BaseFunction {
    pub const ALL: [BaseFunction; 13] = [
        BaseFunction::Sphere,
        BaseFunction::Cigar,
        BaseFunction::Discus,
        BaseFunction::Ellipsoid,
        BaseFunction::DifferentPowers,
        BaseFunction::Schwefel221,
        BaseFunction::Step,
        BaseFunction::Schwefel12,
        BaseFunction::Ackley,
        BaseFunction::Rastrigin,
        BaseFunction::Michalewicz,
        BaseFunction::Salomon,
        BaseFunction::ScaledRastrigin,
    ];

    /// Lowercase identifier used in configuration files and on the command line.
    pub fn id(self) -> &'static str {
        match self {
            BaseFunction::Sphere => "sphere",
            BaseFunction::Cigar => "cigar",
            BaseFunction::Discus => "discus",
            BaseFunction::Ellipsoid => "ellipsoid",
            BaseFunction::DifferentPowers => "differentpowers",
            BaseFunction::Schwefel221 => "schwefel221",
            BaseFunction::Step => "step",
            BaseFunction::Schwefel12 => "schwefel12",
            BaseFunction::Ackley => "ackley",
            BaseFunction::Rastrigin => "rastrigin",
            BaseFunction::Michalewicz => "michalewicz",
            BaseFunction::Salomon => "salomon",
            BaseFunction::ScaledRastrigin => "scaledrastrigin",
        }
    }

    pub fn modality(self) -> Modality {
        match self {
            BaseFunction::Sphere
            | BaseFunction::Cigar
            | BaseFunction::Discus
            | BaseFunction::Ellipsoid
            | BaseFunction::DifferentPowers
            | BaseFunction::Schwefel221
            | BaseFunction::Step
            | BaseFunction::Schwefel12 => Modality::Unimodal,
            _ => Modality::Multimodal,
        }
    }
}

impl fmt::Display for BaseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for BaseFunction {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BaseFunction::ALL
            .iter()
            .copied()
            .find(|f| f.id() == s)
            .ok_or_else(|| EvalError::UnknownFunction(s.into()))
    }
}

/// `10^(k (i-1)/(n-1))` for 0-based `i`.
#[inline]
fn log_scale(k: f64, i: usize, n: usize) -> f64 {
    libm::pow(10.0, k * i as f64 / (n - 1) as f64)
}

/// Evaluates the untransformed benchmark formula at `y`.
pub fn eval_base(id: BaseFunction, y: &[f64]) -> Result<f64, EvalError> {
    let n = y.len();
    if n < 2 {
        return Err(EvalError::DimensionTooSmall(n));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite(i));
    }
    let nf = n as f64;
    let sum_sq = || y.iter().map(|v| v * v).sum::<f64>();
    let cost = match id {
        BaseFunction::Sphere => sum_sq(),
        BaseFunction::Cigar => y[0] * y[0] + 1e6 * y[1..].iter().map(|v| v * v).sum::<f64>(),
        BaseFunction::Discus => 1e6 * y[0] * y[0] + y[1..].iter().map(|v| v * v).sum::<f64>(),
        BaseFunction::Ellipsoid => y.iter().enumerate().map(|(i, v)| log_scale(6.0, i, n) * v * v).sum(),
        BaseFunction::DifferentPowers => y
            .iter()
            .enumerate()
            .map(|(i, v)| libm::pow(v.abs(), (2.0 + 4.0 * i as f64) / (nf - 1.0)))
            .sum(),
        BaseFunction::Schwefel221 => y.iter().fold(0.0f64, |acc, v| acc.max(v.abs())),
        BaseFunction::Step => y
            .iter()
            .map(|v| {
                let k = libm::floor(v + 0.5);
                k * k
            })
            .sum(),
        BaseFunction::Schwefel12 => {
            let mut prefix = 0.0;
            let mut acc = 0.0;
            for v in y {
                prefix += v;
                acc += prefix * prefix;
            }
            acc
        }
        BaseFunction::Ackley => {
            let rms = libm::sqrt(sum_sq() / nf);
            let mean_cos = y.iter().map(|v| libm::cos(2.0 * PI * v)).sum::<f64>() / nf;
            -20.0 * libm::exp(-0.2 * rms) - libm::exp(mean_cos) + 20.0 + E
        }
        BaseFunction::Rastrigin => {
            10.0 * nf + y.iter().map(|v| v * v - 10.0 * libm::cos(2.0 * PI * v)).sum::<f64>()
        }
        BaseFunction::Michalewicz => {
            let s: f64 = y
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let inner = libm::sin((i + 1) as f64 * v * v / PI);
                    libm::sin(*v) * libm::pow(inner, 20.0)
                })
                .sum();
            600.0 - s
        }
        BaseFunction::Salomon => {
            let r = libm::sqrt(sum_sq());
            1.0 - libm::cos(2.0 * PI * r) + 0.1 * r
        }
        BaseFunction::ScaledRastrigin => {
            10.0 * nf
                + y.iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let z = log_scale(1.0, i, n) * v;
                        z * z - 10.0 * libm::cos(2.0 * PI * z)
                    })
                    .sum::<f64>()
        }
    };
    Ok(cost)
}

/// A black-box cost function that may be shared across worker threads.
pub trait Objective: Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, x: &[f64]) -> Result<f64, EvalError>;
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn evaluate(&self, x: &[f64]) -> Result<f64, EvalError> {
        (**self).evaluate(x)
    }
}

/// A rotated and shifted benchmark instance.
///
/// Everything except the evaluation counter is immutable after construction,
/// so a single instance can be evaluated concurrently from many workers.
#[derive(Debug)]
pub struct ObjectiveSpec {
    base: BaseFunction,
    n: usize,
    rotation: Vec<f64>,
    shift: Vec<f64>,
    evals: AtomicU64,
}

impl ObjectiveSpec {
    /// Builds an instance from an explicit row-major rotation and shift.
    pub fn new(base: BaseFunction, rotation: Vec<f64>, shift: Vec<f64>) -> Result<Self, EvalError> {
        let n = shift.len();
        if n < 2 {
            return Err(EvalError::DimensionTooSmall(n));
        }
        if rotation.len() != n * n {
            return Err(EvalError::DimensionMismatch { expected: n * n, got: rotation.len() });
        }
        let defect = orthogonality_defect(&rotation, n);
        if !(defect <= 1e-10) {
            return Err(EvalError::NotOrthogonal(defect));
        }
        Ok(Self { base, n, rotation, shift, evals: AtomicU64::new(0) })
    }

    /// Identity rotation, zero shift.
    pub fn identity(base: BaseFunction, n: usize) -> Result<Self, EvalError> {
        let mut rotation = vec![0.0; n * n];
        for i in 0..n {
            rotation[i * n + i] = 1.0;
        }
        Self::new(base, rotation, vec![0.0; n])
    }

    /// Same rotation and function with a different shift; the counter starts at zero.
    pub fn with_shift(&self, shift: Vec<f64>) -> Result<Self, EvalError> {
        if shift.len() != self.n {
            return Err(EvalError::DimensionMismatch { expected: self.n, got: shift.len() });
        }
        Ok(Self { base: self.base, n: self.n, rotation: self.rotation.clone(), shift, evals: AtomicU64::new(0) })
    }

    pub fn base(&self) -> BaseFunction {
        self.base
    }

    pub fn rotation(&self) -> &[f64] {
        &self.rotation
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    /// Number of completed `evaluate` calls.
    pub fn evaluations(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    /// `R (x - s)`
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        if x.len() != self.n {
            return Err(EvalError::DimensionMismatch { expected: self.n, got: x.len() });
        }
        let centered: Vec<f64> = x.iter().zip(&self.shift).map(|(a, b)| a - b).collect();
        Ok(matvec(&self.rotation, self.n, &centered))
    }
}

impl Objective for ObjectiveSpec {
    fn dim(&self) -> usize {
        self.n
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.evals.fetch_add(1, Ordering::Relaxed);
        let y = self.transform(x)?;
        eval_base(self.base, &y)
    }
}

/// Seeded instance: `R` is the orthogonal QR factor (positive `R` diagonal) of
/// an `n x n` standard Gaussian matrix, `s` is uniform on `[-2, 2]^n`, both
/// drawn from one ChaCha8 stream seeded with `seed`.
pub fn make_objective(id: BaseFunction, n: usize, seed: u64) -> Result<ObjectiveSpec, EvalError> {
    if n < 2 {
        return Err(EvalError::DimensionTooSmall(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let gauss: Vec<f64> = (0..n * n).map(|_| StandardNormal.sample(&mut rng)).collect();
        // a singular Gaussian draw has probability zero; redraw if it happens
        if let Some(rotation) = orthogonal_factor(&gauss, n) {
            let shift = (0..n).map(|_| rng.random_range(-SHIFT_RANGE..=SHIFT_RANGE)).collect();
            return ObjectiveSpec::new(id, rotation, shift);
        }
    }
}
