use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: parse error at byte {offset}: {message}", path.display())]
    Parse {
        path: PathBuf,
        offset: u64,
        message: String,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] cram_core::Error),
}

impl SimError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 input/parse, 2 configuration, 3 internal guard.
    pub fn exit_code(&self) -> u8 {
        match self {
            SimError::Io { .. } | SimError::Parse { .. } => 1,
            SimError::Config(_) => 2,
            SimError::Core(e) => match e {
                cram_core::Error::InvalidConfig(_) => 2,
                cram_core::Error::ProbeDidNotSettle { .. } => 3,
                cram_core::Error::EventOutOfBounds { .. } | cram_core::Error::ShapeMismatch => 1,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
