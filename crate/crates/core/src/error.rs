use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, MsError>;

#[derive(Debug, Error)]
pub enum MsError {
    #[error("invalid time series: {0}")]
    InvalidSeries(String),

    #[error("invalid transition matrix: {0}")]
    InvalidTransition(String),

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid membership matrix: {0}")]
    InvalidMembership(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Markov chain is not ergodic")]
    NonErgodicChain,

    #[error("state is absorbing (p_ii = 1), mean duration is infinite")]
    AbsorbingState,

    #[error("mixture density is only available for AR order 0 or 1, got {0}")]
    UnsupportedOrder(usize),

    #[error("likelihood underflowed to zero at t = {t}")]
    DegenerateLikelihood { t: usize },

    #[error("smoother division by a zero predicted probability at t = {t}")]
    DivisionByZeroProbability { t: usize },

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("Hessian is singular (condition number {condition:.3e})")]
    SingularHessian { condition: f64 },

    #[error("all observations are identical; cannot form {k} clusters")]
    DegenerateData { k: usize },

    #[error("index is undefined for a single cluster")]
    UndefinedForSingleCluster,

    #[error("partition has fewer than two non-empty clusters")]
    SingleClusterPartition,

    #[error("every membership row is tied; silhouette weights are all zero")]
    AllWeightsZero,

    #[error("two centroids coincide")]
    CoincidentCentroids,

    #[error("partitions have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("moving-average window {window} is invalid for a series of length {len}")]
    WindowTooLarge { window: usize, len: usize },

    #[error("unknown DGP label `{0}`")]
    UnknownLabel(String),

    #[error("column `{0}` not found")]
    ColumnNotFound(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    ParseError {
        row: usize,
        column: String,
        message: String,
    },

    #[error("series is empty")]
    EmptySeries,

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl MsError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MsError::Io {
            path: path.into(),
            source,
        }
    }

    /// Broad category used by the CLI to pick an exit code.
    pub fn kind(&self) -> ErrorKind {
        use MsError::*;
        match self {
            InvalidArgument(_) | UnknownLabel(_) | Config(_) => ErrorKind::Usage,
            InvalidSeries(_) | InvalidTransition(_) | InvalidSpec(_) | InvalidMembership(_)
            | InsufficientData { .. } | DegenerateData { .. } | LengthMismatch(..)
            | WindowTooLarge { .. } | ColumnNotFound(_) | ParseError { .. } | EmptySeries
            | Io { .. } | Csv(_) | Json(_) => ErrorKind::Data,
            NonErgodicChain
            | AbsorbingState
            | UnsupportedOrder(_)
            | DegenerateLikelihood { .. }
            | DivisionByZeroProbability { .. }
            | SingularHessian { .. }
            | UndefinedForSingleCluster
            | SingleClusterPartition
            | AllWeightsZero
            | CoincidentCentroids => ErrorKind::Numerical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}
