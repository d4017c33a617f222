use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("element {element} is not a canonical element of {group}")]
    Mismatch { group: String, element: String },
    #[error("budget exceeded: {reached} elements reached, largest complete radius {completed}")]
    Budget { reached: usize, completed: usize },
    #[error("series not summable: r*rho = {0} >= 1")]
    NotSummable(f64),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
