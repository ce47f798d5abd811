use thiserror::Error;

/// Errors produced by the simulation and estimation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("exponent overflow at lambda = {lambda}")]
    ExponentOverflow { lambda: f64 },

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("bisection failed to bracket the root in [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("triplet has finite variation paths; a Gaussian part or a stable jump family is required")]
    FiniteVariation,

    #[error("invalid Levy triplet: {0}")]
    InvalidTriplet(String),

    #[error("gamma pole at alpha=3/2")]
    GammaPole,

    #[error("non-admissible weights: {0}")]
    NonAdmissibleWeights(String),

    #[error("invalid step law: {0}")]
    InvalidStepLaw(String),

    #[error("rejection budget exceeded after {trials} trials (acceptance rate estimate {acceptance_rate:.3e})")]
    RejectionBudget { trials: u64, acceptance_rate: f64 },

    #[error("parity-infeasible: {0}")]
    ParityInfeasible(String),

    #[error("infeasible conditioning: {0}")]
    InfeasibleConditioning(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("time {time} outside [0, {duration}]")]
    OutOfRange { time: f64, duration: f64 },

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("malformed container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
