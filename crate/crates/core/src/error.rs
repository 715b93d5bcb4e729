use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("domain error at {point:?} in `{subexpr}`")]
    Domain { point: Vec<f64>, subexpr: String },

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("metric is not positive definite at {0:?}")]
    DegenerateMetric(Vec<f64>),

    #[error("eigenvalue collision |lambda - mu| = {gap:e} at {point:?}")]
    EigenvalueCollision { point: Vec<f64>, gap: f64 },

    #[error("eigenvalue clusters cannot be separated at {0:?}")]
    ClusterAmbiguity(Vec<f64>),

    #[error("coordinate map has a singular Jacobian at {0:?}")]
    SingularJacobian(Vec<f64>),

    #[error("trajectory left the chart domain at step {0}")]
    LeftDomain(usize),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("iterative kernel extraction did not converge after {0} iterations")]
    ConvergenceFailure(usize),

    #[error("warped-product conditions fail: {0}")]
    NotWarpedEvidence(String),

    #[error("mu eigenvector is not aligned with the base coordinate (deviation {deviation:e} at {point:?})")]
    MisalignedFrame { point: Vec<f64>, deviation: f64 },

    #[error("bad parameters: {0}")]
    BadParams(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
