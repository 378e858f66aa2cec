use thiserror::Error;

use crate::collapse::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("distribution has no outcomes")]
    EmptyAlphabet,
    #[error("weight {index} is negative or not finite: {value}")]
    NegativeWeight { index: usize, value: f64 },
    #[error("weights sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("alphabet mismatch: {left} vs {right} outcomes")]
    AlphabetMismatch { left: usize, right: usize },

    #[error("invalid box behavior: {0}")]
    InvalidBehavior(String),
    #[error("scenario too large: {vertices} deterministic strategies exceeds the limit of {limit}")]
    ScenarioTooLarge { vertices: u128, limit: u128 },
    #[error("expected a 2-input/2-output bipartite scenario, got {0}")]
    WrongScenarioShape(String),

    #[error("invalid collapse family spec: {0}")]
    InvalidSpec(String),
    #[error("collapse family violates its boundary conditions:\n{0}")]
    BoundaryViolation(Box<ValidationReport>),
    #[error("grid is empty")]
    EmptyGrid,
    #[error("time {0} precedes the trigger instant")]
    TimeBeforeTrigger(f64),
    #[error("time {0} is outside the admissible window")]
    TimeOutsideWindow(f64),
    #[error("prior does not match the prior the collapse family is bound to")]
    PriorMismatch,

    #[error("negative elapsed time {0}")]
    NegativeElapsed(f64),
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("window marginal is not normalized: mass {mass} (theta {theta}, omega {omega})")]
    FormulaInconsistency { mass: f64, theta: f64, omega: f64 },

    #[error("quadrature did not reach tolerance: value {value}, error estimate {error:.3e}")]
    QuadratureFailure { value: f64, error: f64 },
    #[error("adaptive quadrature exceeded maximum depth: value {value}, error estimate {error:.3e}")]
    MaxDepthExceeded { value: f64, error: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("Blahut-Arimoto did not converge after {iterations} iterations (gap {gap:.3e})")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}
