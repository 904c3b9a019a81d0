use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The caller combined options or shapes that cannot work together.
    #[error("usage error: {0}")]
    Usage(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn insufficient(msg: impl Into<String>) -> Self {
        Error::InsufficientData(msg.into())
    }

    /// Process exit code used by the command-line front end.
    ///
    /// 2 usage, 3 data, 4 infeasible optimization.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Infeasible(_) => 4,
            Error::Domain(_)
            | Error::InsufficientData(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => 3,
        }
    }
}
