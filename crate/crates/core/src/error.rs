use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("bernoulli probability {0} is not a finite number in [0, 1]")]
    InvalidProbability(f64),

    #[error("population must contain at least one agent")]
    EmptyPopulation,

    #[error("threshold k = {k} must satisfy 1 <= k <= n = {n}")]
    InvalidThreshold { k: usize, n: usize },

    #[error("max_steps must be at least 1")]
    InvalidMaxSteps,

    #[error("follower agents need at least one neighbor (n = 1)")]
    NoNeighbors,

    #[error("freezing is undefined for populations with Bernoulli agents of 0 < p < 1")]
    FreezingUndefined,

    #[error("state space too large: {states} states exceed the cap of {cap}")]
    StateSpaceTooLarge { states: u128, cap: usize },

    #[error("operation requires {expected} mode")]
    UnsupportedMode { expected: &'static str },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate variance: agent probability {0} is 0 or 1")]
    DegenerateVariance(f64),

    #[error("column {column}: {message}")]
    Parse { column: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
