use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("negative density value {value} at r = {radius}")]
    NegativeDensity { radius: f64, value: f64 },
    #[error("newton iteration diverged at t = {t} after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { t: f64, iterations: usize, residual: f64 },
    #[error("explicit step produced a negative value at r = {radius}; reduce dt or use the implicit scheme")]
    ExplicitNegativity { radius: f64 },
    #[error("line search did not converge: {0}")]
    LineSearch(String),
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),
    #[error("precondition refused: {0}")]
    Refused(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
