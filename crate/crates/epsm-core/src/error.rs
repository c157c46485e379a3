//! Crate-wide error type.

use crate::scenario::Violation;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed scenario or config document, with a source locus.
    #[error("parse error in {path} at line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    /// A loaded scenario violates one or more model invariants.
    #[error("validation failed for scenario `{scenario_id}`: {}", format_violations(.violations))]
    Validation {
        scenario_id: String,
        violations: Vec<Violation>,
    },

    /// Input value outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Severity-model configuration missing or ill-formed.
    #[error("severity model error: {0}")]
    Model(String),

    /// Geometrically impossible input (e.g. vehicle wider than its lane).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// An operation that needs a detected lane got none.
    #[error("empty detection: {0}")]
    EmptyDetection(&'static str),

    /// Ego cannot be matched to any mapped lane.
    #[error("ego is not on a mapped lane (off map)")]
    OffMap,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Report CSVs with differing column schemas.
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn format_violations(violations: &[Violation]) -> String {
    let shown: Vec<String> = violations.iter().take(3).map(|v| v.to_string()).collect();
    let suffix = if violations.len() > 3 {
        format!(" (+{} more)", violations.len() - 3)
    } else {
        String::new()
    };
    format!("{}{}", shown.join("; "), suffix)
}
