//! Scenario-driven front end for the `contactrel` library: JSON scenario
//! loading, presets, trajectory and ensemble runs with CSV/JSONL output, and
//! the invariant verification battery.

// Tensor code indexes components explicitly, and `!(x > 0.0)` deliberately
// rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod expr_metric;
pub mod output;
pub mod presets;
pub mod run;
pub mod scenario;
pub mod verify;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {field}: {reason}")]
    Validation { field: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown preset `{0}` (see `contactrel presets list`)")]
    UnknownPreset(String),
    #[error(transparent)]
    Core(#[from] contactrel::Error),
}

impl CliError {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
