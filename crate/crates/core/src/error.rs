use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("degenerate collapse: reduction operator annihilated the state at x = {center}")]
    DegenerateCollapse { center: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("trajectory {id} escaped the grid interior at t = {time} (position {position:?})")]
    EscapedDomain { id: usize, time: f64, position: [f64; 2] },

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("no interference fringes present")]
    NoFringes,

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("fringe fit failed: {0}")]
    FitFailure(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed field data: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
