use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("gram matrix of active set {active:?} is singular or ill-conditioned (rcond = {rcond:e})")]
    IllConditioned { active: Vec<usize>, rcond: f64 },

    #[error("path exhausted at step {step}: residual is zero or no candidate can enter")]
    PathExhausted { step: usize },

    #[error("non-generic path at step {step}: knot {knot} repeats the previous knot {previous}")]
    NonGeneric { step: usize, knot: f64, previous: f64 },

    #[error("response lies outside the selection event (min slack {min_slack:e})")]
    OutsideSelection { min_slack: f64 },

    #[error("inconsistent selection event: constraint row {row} has zero direction but negative slack {slack:e}")]
    InconsistentEvent { row: usize, slack: f64 },

    #[error("degenerate truncation interval [{lower}, {upper}]")]
    DegenerateInterval { lower: f64, upper: f64 },

    #[error("truncated normal mass underflows on standardized interval [{lower}, {upper}]")]
    Cancellation { lower: f64, upper: f64 },

    #[error("interval inversion bracket exceeded {limit:e} without reaching pivot level {target}")]
    BracketOverflow { limit: f64, target: f64 },

    #[error("response has zero sample variance")]
    DegenerateResponse,

    #[error("bootstrap acceptance set is empty over {} grid points", trace.len())]
    EmptyAcceptance { trace: Vec<(f64, f64)> },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
