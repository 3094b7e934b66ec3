use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Input(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config {path}: {msg}")]
    Config { path: PathBuf, msg: String },

    #[error(transparent)]
    Core(#[from] evt_kmeans::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    /// Process exit status: 1 for I/O and unreadable input, 2 for usage, 3 for numerical failure.
    pub fn exit_code(&self) -> u8 {
        use evt_kmeans::Error as E;
        match self {
            CliError::Io { .. } | CliError::Input(_) => 1,
            CliError::Usage(_) | CliError::Config { .. } => 2,
            CliError::Core(e) => match e {
                E::Io { .. } | E::Parse { .. } => 1,
                E::Numerical(_) | E::Initialization | E::EmptyTail(_) => 3,
                E::InvalidParameter(_) | E::InvalidInput(_) | E::DimensionMismatch { .. } => 2,
            },
        }
    }
}

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}
