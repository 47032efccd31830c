use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong while loading data or fitting a model.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("response has zero variance")]
    ConstantResponse,

    #[error("all focal-to-observation distances are zero")]
    DegenerateGeometry,

    #[error("bandwidth must be non-negative, got {0}")]
    NegativeBandwidth(f64),

    #[error("normal matrix is singular at focal point {focal} even after ridge jitter")]
    SingularNormalMatrix { focal: usize },

    #[error("no subset of {p} out of {m_free} variables avoids every forbidden pair")]
    InfeasibleCardinality { p: usize, m_free: usize },

    #[error("residual matrix contains non-finite values")]
    NonFiniteErrors,

    #[error("objective increased at iteration {iteration} ({step} step): {previous} -> {current}")]
    NonMonotoneObjective {
        iteration: usize,
        step: &'static str,
        previous: f64,
        current: f64,
    },

    #[error("bandwidth criterion has no interior minimum in [{lo}, {hi}]")]
    SearchBracketFailure { lo: f64, hi: f64 },

    #[error("coefficient mean is zero; range-to-mean ratio is undefined")]
    ZeroMean,

    #[error("at least two focal subsets are needed, got {0}")]
    TooFewSubsets(usize),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("cannot parse {value:?} at row {row}, column `{column}`")]
    UnparseableCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("no data rows in {}", .0.display())]
    EmptyFile(PathBuf),

    #[error("I/O failure on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// True for failures that come from the numerics rather than from the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularNormalMatrix { .. }
                | Error::NonFiniteErrors
                | Error::NonMonotoneObjective { .. }
                | Error::SearchBracketFailure { .. }
                | Error::ZeroMean
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
