use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("{0} must be at least 1")]
    EmptyGrid(&'static str),
    #[error("angle set is empty")]
    NoAngles,
    #[error("angle {angle} at position {index} is outside [0, pi)")]
    AngleOutOfRange { index: usize, angle: f64 },
    #[error("angles must be strictly increasing (position {index})")]
    NotIncreasing { index: usize },
    #[error("limited angle interval [{start}, {end}) must satisfy 0 <= a < b <= pi")]
    InvalidInterval { start: f64, end: f64 },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("input contains a non-finite value at position {index}")]
    NonFiniteInput { index: usize },
    #[error("dense assembly needs {entries} entries per matrix, limit is {limit}")]
    TooLarge { entries: u128, limit: u128 },
    #[error("brute-force oracle limited to n_x <= {limit}, got {n_x}")]
    OracleTooLarge { n_x: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhantomError {
    #[error("phantom has no components")]
    Empty,
    #[error("ellipse {index}: semi-axes must be positive and finite")]
    BadAxes { index: usize },
    #[error("ellipse {index}: parameters must be finite")]
    NonFinite { index: usize },
    #[error("ellipse {index} extends outside the unit ball (|center| + max axis = {extent})")]
    OutsideUnitBall { index: usize, extent: f64 },
    #[error("supersampling factor must be at least 1")]
    BadSupersampling,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("relative error undefined: reference {what} has zero norm")]
    Undefined { what: String },
    #[error("grids of reference and candidate differ")]
    GridMismatch,
}
