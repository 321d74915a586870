use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grids differ: dt {left} vs {right}")]
    GridMismatch { left: f64, right: f64 },
    #[error("concatenation endpoint mismatch: {left} != {right}")]
    EndpointMismatch { left: f64, right: f64 },
    #[error("time {0} is not a grid point")]
    NotGridPoint(f64),
    #[error("time {t} beyond path horizon {t_max}")]
    BeyondHorizon { t: f64, t_max: f64 },
    #[error("invalid integrand: {0}")]
    InvalidIntegrand(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid proposal: {0}")]
    InvalidProposal(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("path left the spatial domain [-{bound}, {bound}] at t = {t}")]
    DomainExit { t: f64, bound: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
