use thiserror::Error;

pub type Result<T> = std::result::Result<T, FdaError>;

/// Broad failure category, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad arguments or configuration.
    Usage,
    /// Input data is malformed or unsuitable.
    Data,
    /// A numerical procedure failed.
    Numerical,
}

#[derive(Debug, Error)]
pub enum FdaError {
    #[error("point {value} lies outside the basis domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid evaluation grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("curve `{id}`: design matrix is rank deficient ({observations} observations for {n_basis} basis functions); use more observations, fewer basis functions or a ridge penalty")]
    RankDeficient {
        id: String,
        observations: usize,
        n_basis: usize,
    },

    #[error("curve `{id}`: {message}")]
    Curve { id: String, message: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("duplicate curve id `{0}`")]
    DuplicateId(String),

    #[error("datasets use different basis systems")]
    BasisMismatch,

    #[error("matrix is not positive semi-definite (eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("total variance is zero")]
    ZeroVariance,

    #[error("regression design matrix is collinear (rank {rank} < {columns} columns)")]
    Collinear { rank: usize, columns: usize },

    #[error("IRLS did not converge after {iterations} iterations (last deviance {deviance}); the response may be separated")]
    NonConvergence { iterations: usize, deviance: f64 },

    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl FdaError {
    pub fn class(&self) -> ErrorClass {
        use FdaError::*;
        match self {
            InvalidArgument(_) | InvalidBasis(_) | InvalidGrid(_) => ErrorClass::Usage,
            NotPsd(_) | Collinear { .. } | NonConvergence { .. } | Numerical(_) => {
                ErrorClass::Numerical
            }
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        FdaError::Io {
            path: path.into(),
            source,
        }
    }
}
