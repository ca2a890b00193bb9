use std::path::PathBuf;

use thiserror::Error;

use crate::Point;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Evaluation of a Green function at its own pole, where it is `-∞`.
    #[error("Green function evaluated at its pole {0}; the value is -infinity")]
    AtPole(Point),

    #[error("point {point} is outside the domain or too close to its boundary ({detail})")]
    OutsideDomain { point: Point, detail: String },

    #[error("perturbation rejected: |a|·‖T‖ = {measured:.6} (must stay below {limit})")]
    Resonance { measured: f64, limit: f64 },

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    /// A convergence study row that failed, tagged with its ε.
    #[error("failed at ε = {epsilon}: {source}")]
    AtEpsilon {
        epsilon: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Whether the failure comes from the numerics rather than from the
    /// caller's input. The CLI maps these to a distinct exit code.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::AtEpsilon { source, .. } => source.is_numerical(),
            _ => matches!(self, Error::Resonance { .. } | Error::Solver(_) | Error::NonConvergence { .. }),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
