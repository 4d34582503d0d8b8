use thiserror::Error;

/// Errors produced by the game model, the Markov engine and the learning dynamics.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("action index {action} out of range for {m} actions")]
    ActionOutOfRange { action: usize, m: usize },

    #[error("state index {state} out of range for {states} states")]
    StateOutOfRange { state: usize, states: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("degenerate input: state {state} has a zero row sum")]
    DegenerateRow { state: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("stationary normalizer vanished (non-ergodic input)")]
    VanishingNormalizer,

    #[error("singular linear system in {0}")]
    Singular(&'static str),

    #[error("payoff vector {0:?} violates the one-memory two-action no-dominance condition")]
    Assumption1Violation([f64; 4]),

    #[error("step size too large: multiplier 1 + eta*delta = {multiplier:e} at state {state}, action {action}")]
    StepTooLarge {
        multiplier: f64,
        state: usize,
        action: usize,
    },

    #[error("deviation leaves the open unit interval at coordinate {index} (value {value})")]
    OutOfSimplex { index: usize, value: f64 },

    #[error("value {0} is outside the open interval (0, 1)")]
    BoundaryInput(f64),

    #[error("free dimension {dimension} exceeds the cap of {cap}")]
    DimensionCap { dimension: usize, cap: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
