use crate::jets::JetError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("singular matrix: {0}")]
    SingularMatrix(String),
    #[error("degenerate flag: w is parallel to y")]
    DegenerateFlag,
    #[error("{what} did not converge (last residual {residual:.3e})")]
    Convergence { what: String, residual: f64 },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("N must differ from the dimension n")]
    BadN,
    #[error("integration step failure at t = {t}")]
    StepFailure { t: f64 },
    #[error("geodesic left the chart at t = {t}")]
    ChartExit { t: f64 },
    #[error("degenerate Jacobian (conjugate point) at r = {radius}")]
    DegenerateJacobian { radius: f64 },
    #[error("pole of the model function at t = {0}")]
    Pole(f64),
    #[error("hypothesis failure: {0}")]
    Hypothesis(String),
    #[error("dimension {0} not supported for this quantity")]
    BadDimension(usize),
    #[error("grid too coarse: refinement changed the result by {relative_change:.3e}")]
    GridTooCoarse { relative_change: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
