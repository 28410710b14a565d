use thiserror::Error;

/// Failure modes shared by every module.
///
/// `Argument` covers caller mistakes (index ranges, malformed bodies, dimension
/// mismatches). `Numerical` covers solver breakdowns that a caller can only work
/// around by changing inputs or sampling parameters.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

pub(crate) fn num_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Numerical(msg.into()))
}
