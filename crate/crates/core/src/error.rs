use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state space needs at least 2 symbols, got {0}")]
    StateSpaceTooSmall(usize),

    #[error("kernel must be square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },

    #[error("row {row}: {reason}")]
    InvalidRow { row: usize, reason: String },

    #[error("kernel is not primitive: no power up to {bound} is strictly positive")]
    NonPrimitive { bound: usize },

    #[error("stationary solve residual {residual:e} exceeds {tolerance:e}")]
    NumericalFailure { residual: f64, tolerance: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("d(t) stays above {level} for every t up to the cap {cap}")]
    HorizonExceeded { level: f64, cap: usize },

    #[error("stationary mass of state {state} is {mass:e}, too small to reverse")]
    ZeroStationaryMass { state: usize, mass: f64 },

    #[error("symmetric eigensolver did not converge for k = {k}")]
    EigensolverFailure { k: usize },

    #[error("composite state space of {states} states exceeds the cap of {cap}")]
    SizeOverflow { states: usize, cap: usize },

    #[error("invalid order: {0}")]
    InvalidOrder(String),

    #[error("invalid context {context:?}: {reason}")]
    InvalidContext { context: String, reason: String },

    #[error("empty segment")]
    EmptySegment,

    #[error("argument out of range: {0}")]
    Range(String),

    #[error("denominator {0:e} is too close to zero")]
    DivisionGuard(f64),

    #[error("omega never crosses sqrt(m)*eps on the tabulated grid (m = {m})")]
    NoSolution { m: f64 },

    #[error("operation needs a binary alphabet, got {symbols} symbols")]
    BinaryOnly { symbols: usize },

    #[error("margin h = {h:e} is zero")]
    ZeroMargin { h: f64 },

    #[error("unknown event {0:?}")]
    UnknownEvent(String),

    #[error("no bound matches tail estimate {0}")]
    KeyMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
