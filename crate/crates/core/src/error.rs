use thiserror::Error;

pub type Result<T> = std::result::Result<T, QabError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("degenerate problem: initial and final ground states coincide (alpha0 = {alpha0})")]
    DegenerateProblem { alpha0: f64 },

    #[error("gap vanishes at x = {x:?}")]
    ZeroGap { x: Vec<f64> },

    #[error("metric is singular at x = {x:?}")]
    SingularMetric { x: Vec<f64> },

    #[error("integration diverged at s = {s}")]
    Divergence { s: f64 },

    #[error("shooting did not converge after {iterations} iterations (best residual {best_residual:e})")]
    ShootingFailure { iterations: usize, best_residual: f64 },

    #[error("trajectory left the regular region at s = {s}")]
    RegionExit { s: f64 },

    #[error("path velocity vanishes at s = {s}")]
    DegenerateParametrization { s: f64 },

    #[error("target ground state is degenerate (splitting {splitting:e})")]
    AmbiguousTarget { splitting: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unmasked coverage {covered:.3} is below the required {required:.3}")]
    Coverage { covered: f64, required: f64 },
}

impl QabError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        QabError::InvalidInput(msg.into())
    }
}
