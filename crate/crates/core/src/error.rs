use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported dimension {dim}: {reason}")]
    UnsupportedDimension { dim: usize, reason: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("degenerate hyperplane: {0}")]
    DegenerateHyperplane(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("reference fit has zero objective; GCoD is undefined")]
    DegenerateReference,
    #[error("solver failure: {0}")]
    Solver(String),
}

impl From<hyperfit_lp::LpError> for Error {
    fn from(e: hyperfit_lp::LpError) -> Self {
        Error::Solver(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
