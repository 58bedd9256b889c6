use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown scheme family `{0}` (expected AB, AM, or BDF)")]
    UnknownFamily(String),

    #[error("{family} step count {m} out of range ({min}..={max})")]
    StepCountOutOfRange {
        family: &'static str,
        m: u32,
        min: u32,
        max: u32,
    },

    #[error("lattice index {k} is not in the {lattice} lattice for M = {m}")]
    LatticeIndexOutOfRange {
        k: i64,
        lattice: &'static str,
        m: u32,
    },

    #[error("invalid scheme: {0}")]
    InvalidScheme(String),

    #[error("invalid rational `{0}`: expected `p/q` or `p` with nonzero q")]
    InvalidRational(String),

    #[error("root finding did not converge after {iterations} iterations (degree {degree})")]
    RootFindingFailed { iterations: usize, degree: usize },

    #[error("truncation constants all vanish through C_{max_order}; order exceeds max_order = {max_order}")]
    OrderExceedsMaxOrder { max_order: u32 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("missing initial dynamics at index {index}")]
    MissingInitialDynamics { index: usize },

    #[error("unexpected initial dynamics at index {index} (outside the supplied-data index set)")]
    UnexpectedInitialDynamics { index: usize },

    #[error("state grid too short: N = {n} but the scheme needs at least {needed} steps")]
    GridTooShort { n: usize, needed: usize },

    #[error("(t1 - t0)/h = {ratio} is not an integer number of steps")]
    NonIntegralStepCount { ratio: f64 },

    #[error("reference integration did not self-verify: refine doubling changed the trajectory by {achieved:e} (required {required:e})")]
    ReferenceNotConverged { achieved: f64, required: f64 },

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("need at least {needed} finite positive data points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid study configuration: {0}")]
    InvalidStudy(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed CSV at line {line}: {message}")]
    MalformedCsv { line: usize, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
