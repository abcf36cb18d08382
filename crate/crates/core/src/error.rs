//! Error types shared by the toolkit.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Unified error for profile construction, root finding, solvers and
/// experiment drivers. The CLI maps these onto exit-code classes, so new
/// variants should pick the matching class below.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters, grids or configuration files.
    #[error("config: {0}")]
    Config(String),

    /// A numerical procedure failed to converge or hit a guard.
    #[error("numerical: {0}")]
    Numerical(String),

    /// A scan completed but produced no result (e.g. no unstable box).
    #[error("not found: {0}")]
    NotFound(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
    pub fn not_found(msg: impl Into<String>) -> Self {
        Error::NotFound(msg.into())
    }

    /// Exit-code class used by the command line front end
    /// (2 = config, 3 = numerical, 4 = no result).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Numerical(_) | Error::Io(_) => 3,
            Error::NotFound(_) => 4,
        }
    }
}
