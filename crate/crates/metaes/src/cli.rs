//! The `metaes` command line: `run`, `bench` and `plot`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::config::{Algorithm, ConfigError, Profile, RunConfig, SuiteConfig};
use crate::exec::{run_meta, run_serial, ExecError, RunReport};
use crate::plot::{render_svg, Series, XAxis};
use crate::trace::{self, TraceRow};

/// Environment variable that overrides the configured output directory.
pub const OUTDIR_ENV: &str = "METAES_OUTDIR";

#[derive(Debug, Parser)]
#[command(name = "metaes", version, about = "Distributed LM-CMA meta-optimizer and benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one optimizer as described by a config file.
    Run {
        config: PathBuf,
        /// Defaults for keys the file leaves out.
        #[arg(long, value_enum, default_value_t)]
        profile: Profile,
    },
    /// Run every (function, algorithm, seed) cell of a suite file.
    Bench {
        suite: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        profile: Profile,
    },
    /// Draw convergence curves from one or more trace files.
    Plot {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// Horizontal axis.
        #[arg(long, value_enum, default_value_t)]
        x: XAxis,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Config { path: String, source: ConfigError },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn config_error(path: &Path, source: ConfigError) -> CliError {
    CliError::Config { path: path.display().to_string(), source }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn read_config(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| config_error(path, ConfigError::new(format!("cannot read file: {e}"))))
}

/// Runs a parsed command line; `outdir` replaces the configured directory.
pub fn dispatch(cli: Cli, outdir: Option<PathBuf>) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, profile } => cmd_run(&config, profile, outdir).map(|_| ()),
        Command::Bench { suite, profile } => cmd_bench(&suite, profile, outdir).map(|_| ()),
        Command::Plot { traces, output, x } => cmd_plot(&traces, &output, x),
    }
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let outdir = std::env::var_os(OUTDIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    match dispatch(cli, outdir) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Runs the configured optimizer to completion.
pub fn execute(config: &RunConfig) -> Result<RunReport, ExecError> {
    let objective = config.objective()?;
    match config.algorithm {
        Algorithm::LmcmaSerial => run_serial(&config.serial_run(), &objective),
        Algorithm::Dlmcma => run_meta(&config.meta_run(), &objective),
    }
}

fn write_artifacts(dir: &Path, config: &RunConfig, report: &RunReport) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    trace::save_trace(&dir.join("trace.csv"), &trace::rows(report)).map_err(runtime)?;
    let summary = serde_json::to_string_pretty(&trace::summary(config, report)).map_err(runtime)?;
    let path = dir.join("summary.json");
    fs::write(&path, summary + "\n").map_err(|e| runtime(format!("{}: {e}", path.display())))
}

/// Writes `trace.csv` and `summary.json` into the output directory.
pub fn cmd_run(path: &Path, profile: Profile, outdir: Option<PathBuf>) -> Result<RunReport, CliError> {
    let src = read_config(path)?;
    let mut config = RunConfig::parse(&src, profile).map_err(|e| config_error(path, e))?;
    if let Some(dir) = outdir {
        config.outdir = dir;
    }
    let report = execute(&config).map_err(runtime)?;
    write_artifacts(&config.outdir, &config, &report)?;
    println!(
        "{} {} n={}: best_f={:e} evals={} records={} -> {}",
        config.algorithm,
        config.function,
        config.n,
        report.best_f,
        report.total_evals,
        report.records.len(),
        config.outdir.display()
    );
    Ok(report)
}

/// One line of `medians.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianRow {
    pub function: String,
    pub algorithm: String,
    pub runs: usize,
    pub failed: usize,
    pub status: &'static str,
    pub median_best_f: Option<f64>,
    pub median_evals: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct CurveRow {
    function: String,
    algorithm: String,
    epoch: usize,
    median_evals: f64,
    median_best_f: f64,
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    Some(if k % 2 == 1 { xs[k / 2] } else { 0.5 * (xs[k / 2 - 1] + xs[k / 2]) })
}

/// Median curve over runs of different lengths; shorter runs hold their last row.
fn median_curve(traces: &[Vec<TraceRow>]) -> Vec<(f64, f64)> {
    let traces: Vec<&Vec<TraceRow>> = traces.iter().filter(|t| !t.is_empty()).collect();
    let len = traces.iter().map(|t| t.len()).max().unwrap_or(0);
    (0..len)
        .map(|i| {
            let at = |t: &&Vec<TraceRow>| t[i.min(t.len() - 1)];
            let evals = median(traces.iter().map(|t| at(t).evals as f64).collect()).unwrap_or(0.0);
            let best = median(traces.iter().map(|t| at(t).best_f).collect()).unwrap_or(f64::INFINITY);
            (evals, best)
        })
        .collect()
}

/// Runs the grid sequentially; failed cells are counted, not fatal.
pub fn cmd_bench(path: &Path, profile: Profile, outdir: Option<PathBuf>) -> Result<Vec<MedianRow>, CliError> {
    let src = read_config(path)?;
    let suite = SuiteConfig::parse(&src, profile).map_err(|e| config_error(path, e))?;
    let root = outdir.unwrap_or(suite.outdir.clone());

    let mut medians = Vec::new();
    let mut curves = Vec::new();
    for &function in &suite.functions {
        for &algorithm in &suite.algorithms {
            let cells = suite.cells.iter().filter(|c| c.function == function && c.algorithm == algorithm);
            let mut finals = Vec::new();
            let mut evals = Vec::new();
            let mut traces = Vec::new();
            let mut runs = 0;
            for cell in cells {
                runs += 1;
                let dir = root.join(function.id()).join(algorithm.id()).join(format!("seed-{}", cell.seed));
                let mut cell = cell.clone();
                cell.outdir = dir.clone();
                match execute(&cell).map_err(runtime).and_then(|r| write_artifacts(&dir, &cell, &r).map(|_| r)) {
                    Ok(report) => {
                        eprintln!("{function} {algorithm} seed {}: best_f={:e}", cell.seed, report.best_f);
                        finals.push(report.best_f);
                        evals.push(report.total_evals as f64);
                        traces.push(trace::rows(&report));
                    }
                    Err(e) => eprintln!("{function} {algorithm} seed {}: failed: {e}", cell.seed),
                }
            }
            let failed = runs - finals.len();
            for (epoch, (e, f)) in median_curve(&traces).into_iter().enumerate() {
                curves.push(CurveRow {
                    function: function.id().into(),
                    algorithm: algorithm.id().into(),
                    epoch,
                    median_evals: e,
                    median_best_f: f,
                });
            }
            medians.push(MedianRow {
                function: function.id().into(),
                algorithm: algorithm.id().into(),
                runs,
                failed,
                status: match failed {
                    0 => "ok",
                    f if f == runs => "failed",
                    _ => "partial",
                },
                median_best_f: median(finals),
                median_evals: median(evals),
            });
        }
    }

    fs::create_dir_all(&root).map_err(|e| runtime(format!("{}: {e}", root.display())))?;
    write_csv(&root.join("medians.csv"), &medians)?;
    write_csv(&root.join("median_curves.csv"), &curves)?;
    if medians.iter().all(|m| m.status == "failed") {
        return Err(CliError::Runtime("every benchmark cell failed".into()));
    }
    Ok(medians)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let err = |e: csv::Error| runtime(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|e| runtime(format!("{}: {e}", path.display())))
}

/// Labels each trace by its path, made unique when paths repeat.
pub fn cmd_plot(traces: &[PathBuf], output: &Path, x: XAxis) -> Result<(), CliError> {
    if traces.is_empty() {
        return Err(CliError::Runtime("at least one trace is required".into()));
    }
    let mut series: Vec<Series> = Vec::with_capacity(traces.len());
    for path in traces {
        let rows = trace::load_trace(path).map_err(runtime)?;
        let mut label = path.display().to_string();
        if series.iter().any(|s| s.label == label) {
            label = format!("{label} #{}", series.len() + 1);
        }
        series.push(Series { label, rows });
    }
    fs::write(output, render_svg(&series, x)).map_err(|e| runtime(format!("{}: {e}", output.display())))
}
