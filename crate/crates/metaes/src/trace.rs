//! `trace.csv` and `summary.json`.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::config::RunConfig;
use crate::exec::{RunReport, StopReason};

pub const TRACE_HEADER: [&str; 5] = ["epoch", "evals", "wall_s", "best_f", "sigma_prime"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub epoch: u64,
    pub evals: u64,
    pub wall_s: f64,
    pub best_f: f64,
    pub sigma_prime: f64,
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Malformed { path: PathBuf, line: u64, message: String },
}

pub fn rows(report: &RunReport) -> Vec<TraceRow> {
    report
        .records
        .iter()
        .map(|r| TraceRow {
            epoch: r.epoch,
            evals: r.evals,
            wall_s: r.wall_s,
            best_f: r.best_f,
            sigma_prime: r.sigma_prime,
        })
        .collect()
}

/// Writes the header, then one line per row. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_trace<W: Write>(out: W, rows: &[TraceRow]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trace(path: &Path, rows: &[TraceRow]) -> Result<(), TraceError> {
    let io_err = |source| TraceError::Io { path: path.to_owned(), source };
    let file = File::create(path).map_err(io_err)?;
    write_trace(file, rows).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(source),
        other => io_err(io::Error::other(format!("{other:?}"))),
    })
}

pub fn parse_trace(text: &str, path: &Path) -> Result<Vec<TraceRow>, TraceError> {
    let malformed = |line: u64, message: String| TraceError::Malformed { path: path.to_owned(), line, message };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| malformed(1, e.to_string()))?;
    if header.iter().ne(TRACE_HEADER) {
        return Err(malformed(1, format!("expected header `{}`", TRACE_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.deserialize::<TraceRow>() {
        match rec {
            Ok(row) => out.push(row),
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                let message = match e.kind() {
                    csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                    _ => e.to_string(),
                };
                return Err(malformed(line, message));
            }
        }
    }
    Ok(out)
}

pub fn load_trace(path: &Path) -> Result<Vec<TraceRow>, TraceError> {
    let text = std::fs::read_to_string(path).map_err(|source| TraceError::Io { path: path.to_owned(), source })?;
    parse_trace(&text, path)
}

fn finite(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

/// The run outcome together with the configuration that produced it.
pub fn summary(config: &RunConfig, report: &RunReport) -> serde_json::Value {
    let stop = match report.stop {
        StopReason::Threshold => "threshold",
        StopReason::Budget => "budget",
        StopReason::Degenerate => "degenerate",
    };
    json!({
        "best_f": finite(report.best_f),
        "total_evals": report.total_evals,
        "wall_seconds": report.wall_seconds,
        "config_hash": config.hash(),
        "records": report.records.len(),
        "failed_epochs": report.failed_epochs,
        "stop": stop,
        "best_x": report.best_x.iter().map(|&x| finite(x)).collect::<Vec<_>>(),
        "config": config.canonical(),
    })
}
