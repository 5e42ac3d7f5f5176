use std::path::PathBuf;

use crate::minimizer::ConvergenceReport;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An argument lies outside the mathematical domain of an operation,
    /// e.g. a field strength beyond Born saturation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular evaluation: {0}")]
    Singularity(String),

    #[error("quadrature did not reach tolerance {tol:e}: estimate {estimate:e} (value {value})")]
    Accuracy { value: f64, estimate: f64, tol: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("constraint violated in cell (i={i}, j={j}): beta^4 |grad phi|^2 = {value}")]
    Constraint { i: usize, j: usize, value: f64 },

    #[error(
        "minimizer stopped after {} iterations with scaled gradient norm {:e}",
        .0.iterations,
        .0.gradient_norm
    )]
    NonConvergence(Box<ConvergenceReport>),

    #[error("requested {requested} bound states for ell={ell}, found {}: {found:?}", .found.len())]
    MissingStates {
        ell: u32,
        requested: usize,
        found: Vec<f64>,
    },

    #[error("sample at r = {r} failed: {source}")]
    Sample { r: f64, source: Box<Error> },

    #[error("{}:{line}: {message}", .path.display())]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures of a numerical procedure (as opposed to bad input
    /// or I/O).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Accuracy { .. }
            | Error::NonConvergence(_)
            | Error::MissingStates { .. }
            | Error::Constraint { .. }
            | Error::Singularity(_)
            | Error::Domain(_) => true,
            Error::Sample { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
