use thiserror::Error;

/// Errors raised by the solvers and estimators.
///
/// Findings that the theory treats as legitimate outcomes (divergent value
/// functions, failed verification checks, unresolved decay rates) are not
/// errors; they are carried in the corresponding report types.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invariant density is not integrable on the truncated domain: {0}")]
    ErgodicityFailure(String),
    #[error("region [{lo}, {hi}] does not meet the grid interior")]
    InvalidRegion { lo: f64, hi: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("time step {dt} too large for drift stiffness {stiffness} (need dt * stiffness < 1)")]
    StepSize { dt: f64, stiffness: f64 },
    #[error("scheme is not monotone at x = {x}: refine the grid (dx = {dx})")]
    NonMonotoneScheme { x: f64, dx: f64 },
    #[error("singular linear system at row {row}")]
    Singular { row: usize },
    #[error("not applicable: {0}")]
    NotApplicable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
