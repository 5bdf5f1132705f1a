use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate circular mean: resultant length is zero")]
    DegenerateMean,

    #[error("near-singular elapsed time: gamma*sigma^2*t = {scaled_time:e} is too small for the transition formula")]
    NearSingularTime { scaled_time: f64 },

    #[error("linear solver failure: {0}")]
    SolverFailure(String),

    #[error("singular covariance at return index {index}: |rho| = {rho} >= 1")]
    SingularCovariance { index: usize, rho: f64 },

    #[error("data error: {0}")]
    Data(String),

    #[error("fit failed after {evaluations} evaluations: {reason}")]
    FitFailure {
        reason: String,
        evaluations: usize,
        best_params: Vec<f64>,
        best_value: f64,
    },

    #[error("bootstrap failed: {failed} of {total} refits failed")]
    Bootstrap { failed: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
