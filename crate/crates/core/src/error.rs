use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("patient {patient_id} is {where_missing}")]
    UnmatchedPatient {
        patient_id: String,
        where_missing: &'static str,
    },

    #[error("duplicate {kind} id {id:?} at {location}")]
    DuplicateId {
        kind: &'static str,
        id: String,
        location: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("Kaplan-Meier fit needs at least one uncensored record")]
    NoEvents,

    #[error("conditional survival undefined at t = {t}: all estimated mass consumed (cdf = 1)")]
    UndefinedConditional { t: f64 },

    #[error("both risk classes are required, found only {0}")]
    SingleClass(&'static str),

    #[error("SVD did not converge")]
    SvdNonConvergence,

    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("search space is empty after enforcing hidden units <= rank")]
    EmptySearchSpace,

    #[error("serialization: {0}")]
    Serialization(String),

    #[error("time budget exceeded")]
    TimedOut,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Short stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::UnmatchedPatient { .. } => "unmatched_patient",
            Error::DuplicateId { .. } => "duplicate_id",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NoEvents => "no_events",
            Error::UndefinedConditional { .. } => "undefined_conditional",
            Error::SingleClass(_) => "single_class",
            Error::SvdNonConvergence => "svd_non_convergence",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::EmptySearchSpace => "empty_search_space",
            Error::Serialization(_) => "serialization",
            Error::TimedOut => "timed_out",
        }
    }
}
