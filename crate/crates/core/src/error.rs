//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation's contract.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A configuration file or session setup is unusable.
    #[error("configuration error: {0}")]
    Config(String),

    /// A mesh or point set is geometrically degenerate.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A sensor reading with zero force and zero torques carries no contact.
    #[error("no contact: force and torques are all zero")]
    NoContact,

    /// The simulated contact landed outside the sensor pad.
    #[error("contact outside the sensor pad")]
    PadMiss,

    /// The visual prior found no visible surface inside the viewing cone.
    #[error("empty visual prior: no visible surface inside the viewing cone")]
    EmptyPrior,

    /// No vertex satisfies both exploration constraints; the frontier is exhausted.
    #[error("exploration complete: no candidate vertex satisfies the constraints")]
    ExplorationComplete,

    /// An optimization or linear solve broke down.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// A file exists but its contents are not in the expected format.
    #[error("{path}: {message}")]
    FileFormat { path: String, message: String },
}

impl Error {
    /// Process exit code used by the CLI: 1 configuration, 2 numerical, 3 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 2,
            Error::Io(_) | Error::FileFormat { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
