use std::fmt;
use std::process::ExitCode;

use salience::models::ModelError;
use salience::training::TrainError;

/// A command failure, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or flag combinations (exit 1).
    Usage(String),
    /// Unreadable, malformed or invalid input (exit 2).
    Data(anyhow::Error),
    /// NaN or infinity detected (exit 3).
    Numeric(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> ExitCode {
        match self {
            Failure::Usage(_) => ExitCode::from(1),
            Failure::Data(_) => ExitCode::from(2),
            Failure::Numeric(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Data(e) => write!(f, "error: {e:#}"),
            Failure::Numeric(e) => write!(f, "numeric failure: {e:#}"),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Extension for attaching context and classifying as a data error.
pub trait DataContext<T> {
    fn data(self, what: &str) -> CliResult<T>;
}

impl<T, E> DataContext<T> for Result<T, E>
where
    E: Into<anyhow::Error>,
{
    fn data(self, what: &str) -> CliResult<T> {
        self.map_err(|e| Failure::Data(e.into().context(what.to_string())))
    }
}

impl From<TrainError> for Failure {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::NonFinite { .. } => Failure::Numeric(e.into()),
            other => Failure::Data(other.into()),
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::NonFinite => Failure::Numeric(e.into()),
            other => Failure::Data(other.into()),
        }
    }
}
