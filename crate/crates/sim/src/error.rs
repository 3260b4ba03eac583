use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(toaloc_core::Error),
    #[error("no point produced a usable position fix")]
    AllUnavailable,
}

impl From<toaloc_core::Error> for SimError {
    fn from(e: toaloc_core::Error) -> Self {
        match e {
            toaloc_core::Error::Config { .. } => SimError::Config(e.to_string()),
            other => SimError::Core(other),
        }
    }
}

impl SimError {
    /// Process exit status: 2 for config problems, 3 when every point failed.
    pub fn exit_code(&self) -> u8 {
        match self {
            SimError::Config(_) => 2,
            SimError::AllUnavailable => 3,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }
}
