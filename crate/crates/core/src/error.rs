use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is singular to working precision (condition estimate {condition:.3e})")]
    SingularMatrix { condition: f64 },

    #[error("block {block} violates the positive definiteness condition (min eigenvalue {min_eig:.3e})")]
    AssumptionViolation { block: usize, min_eig: f64 },

    #[error("block {block} needs a diagonal quadratic term for the closed-form prox step")]
    NonDiagonalProxBlock { block: usize },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("infeasible dual certificate: {0}")]
    InfeasibleCertificate(String),

    #[error("numerical instability: {0}")]
    NumericalInstability(String),

    #[error("non-finite loss while probing schedule parameter {index}")]
    NonFiniteGradient { index: usize },

    #[error("instance {index}: {source}")]
    Instance {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("checksum mismatch for {file}")]
    Checksum { file: String },

    #[error("unsupported dataset format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_instance(self, index: usize) -> Self {
        Error::Instance {
            index,
            source: Box::new(self),
        }
    }

    /// The innermost error, looking through instance tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Instance { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
