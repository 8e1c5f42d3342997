//! Command-line harness around `ball-accel`: CSV ingestion, run
//! configuration, and JSON reports with per-iteration traces.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod error;
pub mod report;
pub mod run;

pub use config::{RunConfig, StrategyKind, Task};
pub use error::{CliError, Result};
pub use report::{emit_plotdata, error_document, Report, SCHEMA_VERSION};
pub use run::run;
