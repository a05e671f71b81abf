use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library and surfaced by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The data cannot support the requested estimate (constant series, too short, ...).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A hypothesis test or model comparison could not be carried out.
    #[error("inference error: {0}")]
    Inference(String),

    /// Malformed input data.
    #[error("data error: {0}")]
    Data(String),

    /// An iterative special-function evaluation did not converge.
    #[error("convergence failure: {0}")]
    Convergence(String),

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
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
