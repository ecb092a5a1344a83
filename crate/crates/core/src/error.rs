use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("r = {0} is not a mesh node")]
    NotANode(f64),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("operation requires lambda = 1 (got {0}); rescale the profile first")]
    LambdaNotOne(f64),

    #[error("non-finite energy encountered at iteration {iteration}")]
    NonFiniteEnergy { iteration: usize },

    #[error("1 + w must stay positive, found {value} at s = {s}")]
    NonPositiveStretch { s: f64, value: f64 },

    #[error("step size underflow at s = {0}")]
    StepUnderflow(f64),

    #[error("singular banded system at pivot {0}")]
    Singular(usize),

    #[error("newton polish diverged: {0}")]
    NewtonDiverged(String),

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("minimization failed at lambda = {lambda}: {source}")]
    Continuation {
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
