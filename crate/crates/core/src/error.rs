use thiserror::Error;

/// Failures raised by the library.
///
/// `NonConvergence` is kept apart from everything else because callers
/// (the CLI in particular) report it with its own exit status.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("entry {index} is not finite")]
    NonFinite { index: usize },

    #[error("entry {index} = {value:e} is below the positivity floor {floor:e}")]
    NotPositive { index: usize, value: f64, floor: f64 },

    #[error("entries sum to {sum:.17} instead of 1")]
    NotNormalized { sum: f64 },

    #[error("entry ({row}, {col}) = {value:e} is negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("column {col} sums to {sum:.17} instead of 1")]
    ColumnSum { col: usize, sum: f64 },

    #[error("dimension {dim} exceeds the supported maximum {max}")]
    DimensionCap { dim: usize, max: usize },

    #[error("{what}: residual {residual:e} exceeds tolerance {tol:e}")]
    Infeasible { what: String, residual: f64, tol: f64 },

    #[error("{solver} did not converge within {iterations} iterations")]
    NonConvergence { solver: String, iterations: usize },

    #[error("eigenvalue computation failed for a {dim}x{dim} matrix")]
    EigenFailure { dim: usize },

    #[error("singular input: {0}")]
    Singular(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("parameter {name} = {value} lies outside [{lo}, {hi}]")]
    OutOfRange { name: &'static str, value: f64, lo: f64, hi: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub fn is_non_convergence(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
