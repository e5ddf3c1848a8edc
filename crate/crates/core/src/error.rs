use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("infeasible constraint system: {0}")]
    Infeasible(String),
    #[error("surrogate risk unbounded below: {0}")]
    Unbounded(String),
    #[error("loss not calibrated on grid")]
    NotCalibrated,
    #[error("invalid field `{field}`: {msg}")]
    Field { field: String, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn field(field: &str, msg: impl Into<String>) -> Self {
        Error::Field { field: field.to_string(), msg: msg.into() }
    }

    /// True for errors caused by the inputs rather than by the toolkit.
    pub fn is_domain(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Domain(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Domain(format!("json: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
