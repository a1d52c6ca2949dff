//! Run and suite configuration files.
//!
//! A configuration is a flat TOML table. Every key is optional except
//! `function` (or `functions` in a suite); missing keys take the values of the
//! selected [`Profile`]. Unknown keys are rejected.
//!
//! ```toml
//! function = "ellipsoid"          # one of the 13 benchmark ids
//! n = 64
//! seed = 7                        # master seed of the optimizer
//! instance_seed = 0               # seed of the rotation and shift
//! algorithm = "dlmcma"            # or "lmcma_serial"
//! lambda_prime = 8
//! mu_prime = 2
//! isolation_mode = "evaluations"  # "generations" | "seconds"
//! isolation = 2000
//! total_evaluations = 200000      # or total_seconds = 600.0
//! threshold = 1e-10
//! sigma0 = 2.0
//! sigma_max = 4.0
//! ne_range = [4, 16]
//! init_box = [-5.0, 5.0]
//! pool_size = 8
//! normalizer = "literal"          # or "variance"
//! stagnation_epochs = 5
//! inner_lambda = 19
//! success_smoothing = 1.0
//! reproducible = true
//! record_wall_time = false
//! outdir = "out"
//! ```
//!
//! A suite file uses the same keys, with `functions`, `algorithms` and either
//! `seeds` or `repetitions` in place of `function`, `algorithm` and `seed`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use metaes_core::lmcma::{default_ne, DEFAULT_LAMBDA};
use metaes_core::meta::default_mu_prime;
use metaes_core::{
    derive_seed, BaseFunction, InnerSettings, IsolationBudget, Modality, Normalizer, OuterSettings,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::exec::{MetaRun, SerialRun, TotalBudget};

/// Seed stream used to draw the initial mean from the initialization box.
const INIT_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        Self { line: None, key: None, message: message.into() }
    }

    fn at_key(src: &str, key: &str, message: impl Into<String>) -> Self {
        Self { line: key_line(src, key), key: Some(key.to_owned()), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "key `{key}`: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line on which `key` is assigned.
fn key_line(src: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    src.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .or_else(|| l.strip_prefix(quoted.as_str()))
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

fn parse_error(e: toml::de::Error, src: &str) -> ConfigError {
    let line = e.span().map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1);
    ConfigError { line, key: None, message: e.message().to_owned() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    LmcmaSerial,
    Dlmcma,
}

impl Algorithm {
    pub fn id(self) -> &'static str {
        match self {
            Algorithm::LmcmaSerial => "lmcma_serial",
            Algorithm::Dlmcma => "dlmcma",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lmcma_serial" => Ok(Algorithm::LmcmaSerial),
            "dlmcma" => Ok(Algorithm::Dlmcma),
            other => Err(format!("unknown algorithm `{other}`, expected `lmcma_serial` or `dlmcma`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    Evaluations,
    Generations,
    Seconds,
}

impl BudgetMode {
    fn id(self) -> &'static str {
        match self {
            BudgetMode::Evaluations => "evaluations",
            BudgetMode::Generations => "generations",
            BudgetMode::Seconds => "seconds",
        }
    }
}

/// Default values applied to keys a file leaves out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Profile {
    /// Small problems that finish in seconds on a workstation.
    #[default]
    Desk,
    /// n = 2000, lambda' = 380, 150 s isolation and a 3 h total budget.
    Full,
}

/// Keys as they appear in the file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    function: Option<String>,
    functions: Option<Vec<String>>,
    algorithms: Option<Vec<String>>,
    seeds: Option<Vec<u64>>,
    repetitions: Option<u64>,
    n: Option<usize>,
    seed: Option<u64>,
    instance_seed: Option<u64>,
    algorithm: Option<String>,
    lambda_prime: Option<usize>,
    mu_prime: Option<usize>,
    isolation_mode: Option<BudgetMode>,
    isolation: Option<f64>,
    total_evaluations: Option<u64>,
    total_seconds: Option<f64>,
    threshold: Option<f64>,
    sigma0: Option<f64>,
    sigma_max: Option<f64>,
    ne_range: Option<[usize; 2]>,
    init_box: Option<[f64; 2]>,
    pool_size: Option<usize>,
    normalizer: Option<String>,
    stagnation_epochs: Option<u32>,
    inner_lambda: Option<usize>,
    success_smoothing: Option<f64>,
    reproducible: Option<bool>,
    record_wall_time: Option<bool>,
    outdir: Option<PathBuf>,
}

/// A fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub function: BaseFunction,
    pub n: usize,
    pub seed: u64,
    pub instance_seed: u64,
    pub algorithm: Algorithm,
    pub lambda_prime: usize,
    pub mu_prime: usize,
    pub isolation_mode: BudgetMode,
    pub isolation: f64,
    pub total_mode: BudgetMode,
    pub total: f64,
    pub threshold: f64,
    pub sigma0: f64,
    pub sigma_max: f64,
    pub ne_range: (usize, usize),
    pub init_box: (f64, f64),
    pub pool_size: usize,
    pub normalizer: Normalizer,
    pub stagnation_epochs: Option<u32>,
    pub inner_lambda: usize,
    pub success_smoothing: f64,
    pub reproducible: bool,
    pub record_wall_time: bool,
    pub outdir: PathBuf,
}

/// A benchmark grid: every function with every algorithm and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub cells: Vec<RunConfig>,
    pub functions: Vec<BaseFunction>,
    pub algorithms: Vec<Algorithm>,
    pub outdir: PathBuf,
}

impl RunConfig {
    /// Parses a single-run file.
    pub fn parse(src: &str, profile: Profile) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(src).map_err(|e| parse_error(e, src))?;
        for key in ["functions", "algorithms", "seeds", "repetitions"] {
            let present = match key {
                "functions" => raw.functions.is_some(),
                "algorithms" => raw.algorithms.is_some(),
                "seeds" => raw.seeds.is_some(),
                _ => raw.repetitions.is_some(),
            };
            if present {
                return Err(ConfigError::at_key(src, key, "only valid in a suite file"));
            }
        }
        let function = match &raw.function {
            Some(id) => parse_function(src, "function", id)?,
            None => return Err(ConfigError::at_key(src, "function", "missing required key `function`")),
        };
        let algorithm = parse_algorithm(src, raw.algorithm.as_deref())?;
        resolve(&raw, src, profile, function, algorithm, raw.seed.unwrap_or(0))
    }

    pub fn objective(&self) -> Result<metaes_core::ObjectiveSpec, metaes_core::EvalError> {
        metaes_core::make_objective(self.function, self.n, self.instance_seed)
    }

    /// Initial mean drawn uniformly from the initialization box.
    pub fn initial_mean(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, INIT_STREAM, 0));
        let (lo, hi) = self.init_box;
        (0..self.n).map(|_| rng.random_range(lo..hi)).collect()
    }

    pub fn inner_settings(&self) -> InnerSettings {
        InnerSettings {
            lambda: Some(self.inner_lambda),
            success_smoothing: self.success_smoothing,
            ..InnerSettings::default()
        }
    }

    fn total_budget(&self) -> TotalBudget {
        match self.total_mode {
            BudgetMode::Seconds => TotalBudget::WallClockSeconds(self.total),
            _ => TotalBudget::Evaluations(self.total as u64),
        }
    }

    fn record_wall(&self) -> bool {
        self.record_wall_time || !self.reproducible
    }

    pub fn meta_run(&self) -> MetaRun {
        let isolation = match self.isolation_mode {
            BudgetMode::Evaluations => IsolationBudget::MaxEvaluations(self.isolation as u64),
            BudgetMode::Generations => IsolationBudget::MaxGenerations(self.isolation as u64),
            BudgetMode::Seconds => IsolationBudget::WallClockSeconds(self.isolation),
        };
        MetaRun {
            outer: OuterSettings {
                lambda_prime: self.lambda_prime,
                mu_prime: self.mu_prime,
                sigma_max: self.sigma_max,
                ne_min: self.ne_range.0,
                ne_max: self.ne_range.1,
                normalizer: self.normalizer,
                init_low: self.init_box.0,
                init_high: self.init_box.1,
                stagnation_epochs: self.stagnation_epochs,
                master_seed: self.seed,
            },
            inner: self.inner_settings(),
            initial_mean: self.initial_mean(),
            sigma0: self.sigma0,
            isolation,
            total: self.total_budget(),
            threshold: self.threshold,
            pool_size: self.pool_size,
            record_wall_time: self.record_wall(),
        }
    }

    pub fn serial_run(&self) -> SerialRun {
        SerialRun {
            inner: self.inner_settings(),
            initial_mean: self.initial_mean(),
            sigma0: self.sigma0,
            ne: default_ne(self.n).max(1),
            total: self.total_budget(),
            threshold: self.threshold,
            seed: self.seed,
            record_wall_time: self.record_wall(),
        }
    }

    /// Every setting that influences the result, in a fixed key order.
    pub fn canonical(&self) -> serde_json::Value {
        let normalizer = match self.normalizer {
            Normalizer::Literal => "literal",
            Normalizer::Variance => "variance",
        };
        json!({
            "function": self.function.id(),
            "n": self.n,
            "seed": self.seed,
            "instance_seed": self.instance_seed,
            "algorithm": self.algorithm.id(),
            "lambda_prime": self.lambda_prime,
            "mu_prime": self.mu_prime,
            "isolation_mode": self.isolation_mode.id(),
            "isolation": self.isolation,
            "total_mode": self.total_mode.id(),
            "total": self.total,
            "threshold": self.threshold,
            "sigma0": self.sigma0,
            "sigma_max": self.sigma_max,
            "ne_range": [self.ne_range.0, self.ne_range.1],
            "init_box": [self.init_box.0, self.init_box.1],
            "pool_size": self.pool_size,
            "normalizer": normalizer,
            "stagnation_epochs": self.stagnation_epochs,
            "inner_lambda": self.inner_lambda,
            "success_smoothing": self.success_smoothing,
            "reproducible": self.reproducible,
            "record_wall_time": self.record_wall_time,
        })
    }

    /// Hex SHA-256 of [`RunConfig::canonical`]; the output directory and the
    /// worker count are left out because they do not change the result.
    pub fn hash(&self) -> String {
        let mut v = self.canonical();
        if let Some(obj) = v.as_object_mut() {
            obj.remove("pool_size");
        }
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }
}

impl SuiteConfig {
    pub fn parse(src: &str, profile: Profile) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(src).map_err(|e| parse_error(e, src))?;
        for (key, present) in [("function", raw.function.is_some()), ("algorithm", raw.algorithm.is_some())] {
            if present {
                return Err(ConfigError::at_key(src, key, format!("use `{key}s` in a suite file")));
            }
        }
        let Some(ids) = &raw.functions else {
            return Err(ConfigError::at_key(src, "functions", "missing required key `functions`"));
        };
        if ids.is_empty() {
            return Err(ConfigError::at_key(src, "functions", "function list is empty"));
        }
        let functions = ids.iter().map(|id| parse_function(src, "functions", id)).collect::<Result<Vec<_>, _>>()?;
        let algorithms = match &raw.algorithms {
            Some(a) if a.is_empty() => {
                return Err(ConfigError::at_key(src, "algorithms", "algorithm list is empty"));
            }
            Some(a) => a.iter().map(|id| parse_algorithm_at(src, "algorithms", id)).collect::<Result<Vec<_>, _>>()?,
            None => vec![Algorithm::Dlmcma],
        };
        if raw.seeds.is_some() && raw.repetitions.is_some() {
            return Err(ConfigError::at_key(src, "repetitions", "set either `seeds` or `repetitions`, not both"));
        }
        if raw.seeds.as_ref().is_some_and(|s| s.is_empty()) || raw.repetitions == Some(0) {
            return Err(ConfigError::at_key(
                src,
                if raw.seeds.is_some() { "seeds" } else { "repetitions" },
                "at least one seed is required",
            ));
        }
        let mut cells = Vec::new();
        for &f in &functions {
            let seeds: Vec<u64> = match (&raw.seeds, raw.repetitions) {
                (Some(s), _) => s.clone(),
                (None, Some(r)) => (0..r).collect(),
                (None, None) => (0..default_repetitions(profile, f)).collect(),
            };
            for &a in &algorithms {
                for &s in &seeds {
                    cells.push(resolve(&raw, src, profile, f, a, s)?);
                }
            }
        }
        let outdir = cells[0].outdir.clone();
        Ok(Self { cells, functions, algorithms, outdir })
    }
}

fn default_repetitions(profile: Profile, f: BaseFunction) -> u64 {
    match (profile, f.modality()) {
        (Profile::Desk, _) => 3,
        (Profile::Full, Modality::Unimodal) => 10,
        (Profile::Full, Modality::Multimodal) => 4,
    }
}

fn parse_function(src: &str, key: &str, id: &str) -> Result<BaseFunction, ConfigError> {
    id.parse().map_err(|_| ConfigError::at_key(src, key, format!("unknown function id `{id}`")))
}

fn parse_algorithm_at(src: &str, key: &str, id: &str) -> Result<Algorithm, ConfigError> {
    id.parse().map_err(|e: String| ConfigError::at_key(src, key, e))
}

fn parse_algorithm(src: &str, id: Option<&str>) -> Result<Algorithm, ConfigError> {
    id.map_or(Ok(Algorithm::Dlmcma), |id| parse_algorithm_at(src, "algorithm", id))
}

fn resolve(
    raw: &RawConfig,
    src: &str,
    profile: Profile,
    function: BaseFunction,
    algorithm: Algorithm,
    seed: u64,
) -> Result<RunConfig, ConfigError> {
    let err = |key: &str, msg: &str| ConfigError::at_key(src, key, msg);
    let full = profile == Profile::Full;

    let n = raw.n.unwrap_or(if full { 2000 } else { 32 });
    if n < 2 {
        return Err(err("n", "dimension must be at least 2"));
    }
    let lambda_prime = raw.lambda_prime.unwrap_or(if full { 380 } else { 8 });
    let mu_prime = raw.mu_prime.unwrap_or_else(|| default_mu_prime(lambda_prime));
    if algorithm == Algorithm::Dlmcma {
        if mu_prime == 0 {
            return Err(err("mu_prime", "must be at least 1"));
        }
        if lambda_prime <= mu_prime {
            return Err(err("lambda_prime", "must exceed mu_prime"));
        }
    }

    let isolation_mode =
        raw.isolation_mode.unwrap_or(if full { BudgetMode::Seconds } else { BudgetMode::Evaluations });
    let isolation = raw.isolation.unwrap_or(if full { 150.0 } else { 2000.0 });
    if !(isolation > 0.0 && isolation.is_finite()) {
        return Err(err("isolation", "must be positive"));
    }
    if isolation_mode != BudgetMode::Seconds && isolation.fract() != 0.0 {
        return Err(err("isolation", "must be a whole number of evaluations or generations"));
    }

    let (total_mode, total) = match (raw.total_evaluations, raw.total_seconds) {
        (Some(_), Some(_)) => {
            return Err(err("total_seconds", "set either `total_evaluations` or `total_seconds`, not both"));
        }
        (Some(e), None) => (BudgetMode::Evaluations, e as f64),
        (None, Some(s)) => (BudgetMode::Seconds, s),
        (None, None) if full => (BudgetMode::Seconds, 3.0 * 3600.0),
        (None, None) => (BudgetMode::Evaluations, 1e5),
    };
    if !(total > 0.0 && total.is_finite()) {
        let key = if total_mode == BudgetMode::Seconds { "total_seconds" } else { "total_evaluations" };
        return Err(err(key, "must be positive"));
    }

    let reproducible = raw.reproducible.unwrap_or(!full);
    if reproducible {
        if total_mode == BudgetMode::Seconds {
            return Err(err("total_seconds", "wall-clock budgets are not reproducible; set `reproducible = false`"));
        }
        if algorithm == Algorithm::Dlmcma && isolation_mode == BudgetMode::Seconds {
            return Err(err(
                "isolation_mode",
                "wall-clock isolation is not reproducible; set `reproducible = false`",
            ));
        }
    }

    let threshold = raw.threshold.unwrap_or(1e-10);
    if threshold.is_nan() {
        return Err(err("threshold", "must be a number"));
    }
    let sigma0 = raw.sigma0.unwrap_or(2.0);
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return Err(err("sigma0", "must be positive"));
    }
    let sigma_max = raw.sigma_max.unwrap_or(2.0 * sigma0);
    if !(sigma_max >= sigma0 && sigma_max.is_finite()) {
        return Err(err("sigma_max", "must be finite and at least sigma0"));
    }
    let ne_default = default_ne(n).max(1);
    let [ne_lo, ne_hi] = raw.ne_range.unwrap_or([4.min(ne_default), ne_default]);
    if ne_lo == 0 || ne_lo > ne_hi {
        return Err(err("ne_range", "need 1 <= low <= high"));
    }
    let [box_lo, box_hi] = raw.init_box.unwrap_or([-5.0, 5.0]);
    if !(box_lo < box_hi && box_lo.is_finite() && box_hi.is_finite()) {
        return Err(err("init_box", "need finite low < high"));
    }
    let pool_size = raw.pool_size.unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, |p| p.get()).min(lambda_prime.max(1))
    });
    if pool_size == 0 {
        return Err(err("pool_size", "must be at least 1"));
    }
    let normalizer = match raw.normalizer.as_deref() {
        None | Some("literal") => Normalizer::Literal,
        Some("variance") => Normalizer::Variance,
        Some(other) => {
            return Err(err("normalizer", &format!("unknown normalizer `{other}`, expected `literal` or `variance`")));
        }
    };
    if raw.stagnation_epochs == Some(0) {
        return Err(err("stagnation_epochs", "must be at least 1"));
    }
    let inner_lambda = raw.inner_lambda.unwrap_or(DEFAULT_LAMBDA);
    if inner_lambda < 2 {
        return Err(err("inner_lambda", "must be at least 2"));
    }
    let success_smoothing = raw.success_smoothing.unwrap_or(1.0);
    if !(success_smoothing > 0.0 && success_smoothing <= 1.0) {
        return Err(err("success_smoothing", "must lie in (0, 1]"));
    }

    Ok(RunConfig {
        function,
        n,
        seed,
        instance_seed: raw.instance_seed.unwrap_or(0),
        algorithm,
        lambda_prime,
        mu_prime,
        isolation_mode,
        isolation,
        total_mode,
        total,
        threshold,
        sigma0,
        sigma_max,
        ne_range: (ne_lo, ne_hi),
        init_box: (box_lo, box_hi),
        pool_size,
        normalizer,
        stagnation_epochs: raw.stagnation_epochs,
        inner_lambda,
        success_smoothing,
        reproducible,
        record_wall_time: raw.record_wall_time.unwrap_or(false),
        outdir: raw.outdir.clone().unwrap_or_else(|| PathBuf::from("out")),
    })
}
