use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Unsupported or malformed input file.
    #[error("format error: {0}")]
    Format(String),

    /// A streaming call was made with inconsistent inputs (sample counts,
    /// non-finite values).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The tracker found no marker pixels in the frame.
    #[error("tracking target lost")]
    TargetLost,

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("identification failed: {0}")]
    Identification(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
