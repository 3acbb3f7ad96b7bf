use thiserror::Error;

/// Errors raised by state construction, coordinate transforms and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("body index {index} out of range for {n} bodies")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("pair ({i}, {j}) is not ordered i < j")]
    InvalidPair { i: usize, j: usize },

    #[error("invalid mass system: {0}")]
    InvalidMass(String),

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("state dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("constraint violated: {what} = {value:e} exceeds {tol:e}")]
    ConstraintViolation {
        what: &'static str,
        value: f64,
        tol: f64,
    },

    /// Zero separation between two bodies (0-based body labels).
    #[error("singular separation between bodies {} and {}", .i + 1, .j + 1)]
    SingularSeparation { i: usize, j: usize },

    #[error("Newton iteration did not converge in {iterations} iterations (last residual {:e})", .residual_history.last().copied().unwrap_or(f64::NAN))]
    MaxIterationsExceeded {
        iterations: usize,
        residual_history: Vec<f64>,
    },

    #[error("singular Jacobian in Newton iteration")]
    SingularJacobian,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("step {step} at t = {t}: {source}")]
    StepFailed {
        step: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("scenario: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
