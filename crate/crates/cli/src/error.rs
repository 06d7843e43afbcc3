use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing artifact: {}", .0.display())]
    MissingArtifact(PathBuf),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Core(#[from] preorder_rl::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use preorder_rl::Error as E;
        match self {
            Self::Config(_) => 2,
            Self::MissingArtifact(_) => 3,
            Self::Shape(_) => 4,
            Self::Core(E::Config(_) | E::Cycle(_)) => 2,
            Self::Core(E::ShapeMismatch(_) | E::LengthMismatch { .. }) => 4,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| {
            if source.kind() == std::io::ErrorKind::NotFound {
                Self::MissingArtifact(path)
            } else {
                Self::Io { path, source }
            }
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>) -> impl FnOnce(csv::Error) -> Self {
        let path = path.into();
        move |source| match source.kind() {
            csv::ErrorKind::Io(e) if e.kind() == std::io::ErrorKind::NotFound => Self::MissingArtifact(path),
            _ => Self::Csv { path, source },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
