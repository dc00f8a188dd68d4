use thiserror::Error;

/// Everything that can go wrong while building states, reducing them or
/// fitting scaling laws.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("block size k = {k} out of range for N = {n}")]
    BlockOutOfRange { k: usize, n: usize },

    #[error("state is not normalized: norm^2 = {norm_sq}")]
    NotNormalized { norm_sq: f64 },

    #[error("density matrix trace {trace} deviates from 1")]
    BadTrace { trace: f64 },

    #[error("density matrix has eigenvalue {value} below the PSD tolerance")]
    NotPositive { value: f64 },

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("sum rule violated: total {total} vs sum of genuine orders {sum}")]
    SumRule { total: f64, sum: f64 },

    #[error("solve failed at h = {field}: {source}")]
    AtField {
        field: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("derivative minimum sits on the grid boundary at h = {field}")]
    BoundaryMinimum { field: f64 },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("system too large for the full Hilbert-space oracle: N = {n}, cap {cap}")]
    TooLarge { n: usize, cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
