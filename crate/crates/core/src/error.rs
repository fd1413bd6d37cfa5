use thiserror::Error;

/// Errors produced by the analysis library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("arity must be at least 1")]
    EmptyArity,
    #[error("axis {axis} is outside 0..{m}")]
    AxisOutOfRange { axis: usize, m: usize },
    #[error("index {k} is beyond the tabulated range 0..{len} and no tail rule is set")]
    TableOutOfRange { k: usize, len: usize },
    #[error("delta^2 must be positive, got {value} at k = {k}")]
    NonPositive { k: usize, value: String },
    #[error("invalid family parameters: {0}")]
    InvalidFamily(String),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("invalid number `{0}`")]
    InvalidNumber(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("interior margin {given} is too small for {kind} (needs at least {required})")]
    MarginTooSmall {
        kind: String,
        given: usize,
        required: usize,
    },
    #[error("structural assumption violated: C*C has off-diagonal entry {value:e} at ({row}, {col})")]
    NotShiftStructured { row: usize, col: usize, value: f64 },
    #[error("the sequence is unbounded; {0}")]
    Unbounded(String),
    #[error("essential-normality gate refused: {0}")]
    NotEssentiallyNormal(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
