//! Error types shared across the crate.
//!
//! Variants map onto the process exit codes used by the command-line
//! front end: parameter and configuration problems, regime violations
//! (for example a contraction proxy above one), numerical divergence,
//! and I/O failures are kept distinct so callers can react differently.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, ShellwaveError>;

#[derive(Debug, Error)]
pub enum ShellwaveError {
    /// Invalid parameter or configuration value.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A mathematical precondition fails for the requested regime,
    /// for example the Neumann-series contraction proxy exceeds one.
    #[error("regime error: {0}")]
    Regime(String),

    /// An iteration diverged or a linear system was numerically singular.
    #[error("divergence: {0}")]
    Divergence(String),

    /// Significant spectral mass sits on the near-zero set of a symbol
    /// that is about to be divided by.
    #[error("symbol singularity: {0}")]
    SymbolSingularity(String),

    /// File-format or filesystem failure.
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for ShellwaveError {
    fn from(e: std::io::Error) -> Self {
        ShellwaveError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for ShellwaveError {
    fn from(e: serde_json::Error) -> Self {
        ShellwaveError::Io(format!("json: {e}"))
    }
}

impl ShellwaveError {
    /// Process exit code associated with this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            ShellwaveError::Parameter(_) => 2,
            ShellwaveError::Regime(_) => 3,
            ShellwaveError::Divergence(_) | ShellwaveError::SymbolSingularity(_) => 4,
            ShellwaveError::Io(_) => 5,
        }
    }
}
