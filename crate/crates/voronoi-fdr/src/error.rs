//! Error type shared by all modules, with the CLI exit-code contract.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: at least one p-vector is required")]
    EmptyInput,

    #[error("{what} out of domain: {value}{}", fmt_line(*.line))]
    OutOfDomain {
        what: &'static str,
        value: f64,
        line: Option<usize>,
    },

    #[error("points {first} and {second} coincide exactly; enable jitter mode to perturb duplicates")]
    DuplicatePoints { first: usize, second: usize },

    #[error("duplicate id `{id}` on line {line}")]
    DuplicateId { id: String, line: usize },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("non-positive cell area {value} at rank position {index}")]
    NonPositiveArea { index: usize, value: f64 },

    #[error("cell areas sum to {sum}, expected 1 within 1e-9")]
    AreaSumMismatch { sum: f64 },

    #[error("too few points: need at least {need}, got {got}")]
    TooFewPoints { need: usize, got: usize },

    #[error("degenerate mixture fit: component {component} collapsed below the scale floor")]
    DegenerateFit { component: usize },

    #[error("missing left-tail FDR estimates; run the empirical-null fit first")]
    MissingEstimates,

    #[error("ordering scheme `{scheme}` is not defined for {dims}-dimensional p-vectors")]
    UnsupportedScheme { scheme: String, dims: usize },

    #[error("series `{id}` is constant; the periodogram is identically zero")]
    ConstantSeries { id: String },

    #[error("series `{id}` has {len} time points, need at least {min}")]
    TooShort { id: String, len: usize, min: usize },

    #[error("decision vector length {left} does not match truth vector length {right}")]
    IndexMismatch { left: usize, right: usize },

    #[error("projection ({}, {}) failed: {source}", axes.0, axes.1)]
    Projection {
        axes: (usize, usize),
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn fmt_line(line: Option<usize>) -> String {
    match line {
        Some(n) => format!(" (line {n})"),
        None => String::new(),
    }
}

impl Error {
    /// Exit code class: 2 input validation, 3 numerical failure, 4 configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateFit { .. } => 3,
            Error::Config(_) | Error::UnsupportedScheme { .. } => 4,
            Error::Projection { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
