use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("degenerate region: {0}")]
    DegenerateRegion(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid solver configuration: {0}")]
    InvalidSolverConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Newton failed to reach the residual tolerance within the iteration budget.
    #[error("Newton stagnated at time step {step} after {iterations} iterations (last residual {residual:e})")]
    NewtonStagnation {
        step: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("non-finite value at time step {step}: {what}")]
    NonFinite { step: usize, what: String },

    #[error("starting cube failed sub-intrinsic verification: ratio {ratio} > K = {tolerance}")]
    StartingCube { ratio: f64, tolerance: f64 },

    #[error("no intrinsic cylinder found: {0}")]
    NoIntrinsicCylinder(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Config(#[from] crate::cli_report::ConfigError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
