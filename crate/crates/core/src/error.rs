use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field does not belong to this grid ({0})")]
    GridMismatch(String),

    #[error("density must be nonnegative, found {value} in cell {cell}")]
    NegativeDensity { cell: usize, value: f64 },

    #[error("non-finite value {value} in cell {cell}")]
    NonFinite { cell: usize, value: f64 },

    #[error("incompatible mean: mu = {given} but the density averages to {actual}")]
    Incompatible { given: f64, actual: f64 },

    #[error("numerical failure in cell {cell}: {reason}")]
    NumericalFailure { cell: usize, reason: String },

    #[error("parameter domain violated: {0}")]
    Domain(String),

    #[error("inadmissible initial data: {0}")]
    Inadmissible(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
