use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} index {index} out of range (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    Shape {
        what: String,
        expected: usize,
        found: usize,
    },

    /// The evidence was impossible under the current beliefs.
    #[error("posterior is identically zero: {0}")]
    AllZeroPosterior(String),

    #[error("fixed-point iteration did not converge after {sweeps} sweeps (residual {residual:e})")]
    NonConvergence {
        last: Vec<Vec<f64>>,
        residual: f64,
        sweeps: usize,
    },

    #[error("support violation at index {index}: p = {p}, q = {q}")]
    SupportViolation { index: usize, p: f64, q: f64 },

    #[error("{count} policies exceed the cap of {cap}")]
    CombinatorialLimit { count: u128, cap: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("{what} must be strictly positive, found {value} at index {index}")]
    NonPositive {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("invalid model: {}", format_violations(.0))]
    InvalidModel(Vec<Violation>),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid history: {0}")]
    History(String),

    #[error("environment episode is over")]
    StepAfterDone,

    #[error("environment stepped before reset")]
    NotReset,

    #[error("oracle size cap exceeded: {0}")]
    ScaleCap(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(v: &[Violation]) -> String {
    let mut parts: Vec<String> = v.iter().take(5).map(ToString::to_string).collect();
    if v.len() > 5 {
        parts.push(format!("... and {} more", v.len() - 5));
    }
    parts.join("; ")
}
