use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("stage index {index} out of range for a {stages}-stage tableau")]
    StageIndex { index: usize, stages: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Newton iteration failed to converge at t = {t}")]
    NewtonDivergence { t: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("more than {max} internal steps required")]
    TooManySteps { max: usize },

    #[error("singular matrix (zero pivot in column {column})")]
    SingularMatrix { column: usize },

    /// The previous companion error is at round-off level, so the contraction
    /// factor of the next sweep cannot be measured.
    #[error("degenerate error estimate: previous companion error {previous:e} is at round-off level")]
    DegenerateEstimate { previous: f64 },

    /// `sigma_k * dt^k >= 1`: the step is beyond the contraction radius of the
    /// correction iteration.
    #[error("error estimator blow-up: sigma * dt^k = {value}")]
    EstimatorBlowup { value: f64 },

    #[error("no previous step available for prediction")]
    MissingHistory,

    #[error("error control is not available in hybrid spatial mode")]
    HybridErrorControl,

    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}
