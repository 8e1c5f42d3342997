//! The JSON report written for every run, the error document written on
//! failure, and the plot-data CSV.

use ball_accel::ms_accel::TraceRecord;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub task: &'static str,
    pub config: RunConfig,
    pub status: String,
    /// Final objective in the task's own terms; absent for experiments.
    pub objective: Option<f64>,
    pub oracle_calls: usize,
    /// Linear systems `Aᵀ(D + λI)A` solved.
    pub solves: usize,
    pub iterations: usize,
    /// Per-iteration records; empty for experiments.
    pub trace: Vec<TraceRecord>,
    /// Task-specific details.
    pub result: Value,
    pub wall_time_s: f64,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Serialize(e.to_string()))
    }
}

/// `{"schema_version": 1, "error": {"kind", "message", "line"?}}`.
pub fn error_document(err: &CliError) -> String {
    let mut body = serde_json::json!({
        "kind": err.kind(),
        "message": err.to_string(),
    });
    if let Some(line) = err.line() {
        body["line"] = line.into();
    }
    serde_json::to_string_pretty(&serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "error": body,
    }))
    .expect("plain JSON values serialize")
}

/// One plot-data row. `f_gap` is measured against the lowest value in the
/// trace, the best available stand-in for `f*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub k: usize,
    pub f: f64,
    pub f_gap: f64,
    pub movement: f64,
    pub cumulative_solves: usize,
}

pub fn plot_rows(trace: &[TraceRecord]) -> Vec<PlotRow> {
    let best = trace.iter().map(|r| r.f).fold(f64::INFINITY, f64::min);
    let mut solves = 0;
    trace
        .iter()
        .map(|r| {
            solves += r.solves;
            PlotRow {
                k: r.k,
                f: r.f,
                f_gap: r.f - best,
                movement: r.movement,
                cumulative_solves: solves,
            }
        })
        .collect()
}

/// CSV with header `k,f,f_gap,movement,cumulative_solves`; header only for
/// a traceless report.
pub fn emit_plotdata(report: &Report) -> Result<String> {
    let ser = |e: csv::Error| CliError::Serialize(e.to_string());
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(["k", "f", "f_gap", "movement", "cumulative_solves"]).map_err(ser)?;
    for row in plot_rows(&report.trace) {
        w.serialize(row).map_err(ser)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Serialize(e.to_string()))
}
