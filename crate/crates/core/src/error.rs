use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not normal/unitary within tolerance (defect {defect:.3e})")]
    NonNormalInput { defect: f64 },
    #[error("eigenvalue iteration did not converge after {iterations} sweeps")]
    ConvergenceFailure { iterations: usize },
    #[error("duplicate interpolation node at x = {x}")]
    DuplicateNode { x: f64 },
    #[error("least-squares system is ill-conditioned (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },
    #[error("eigenphase {phase} lies at the transform singularity")]
    SingularPhase { phase: f64 },
    #[error("eigenphase margin not met after {attempts} resamples of slot {slot}")]
    ResampleBudgetExceeded { slot: usize, attempts: usize },
    #[error("matrix size {size} exceeds the limit {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("trajectory count {count} exceeds the limit {limit}")]
    TooManyTrajectories { count: u128, limit: u128 },
    #[error("no consistent subset found after {trials} trials (needed {needed} of {total} points)")]
    SearchExhausted { trials: usize, needed: usize, total: usize },
    #[error("parameters outside the valid regime: {0}")]
    InvalidRegime(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    /// Whether the failure stems from the numerical regime rather than malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonNormalInput { .. }
                | Error::ConvergenceFailure { .. }
                | Error::IllConditioned { .. }
                | Error::SingularPhase { .. }
                | Error::ResampleBudgetExceeded { .. }
                | Error::InvalidRegime(_)
                | Error::TooLarge { .. }
                | Error::TooManyTrajectories { .. }
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
