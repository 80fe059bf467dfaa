use std::path::PathBuf;

use crate::config::{ConfigErrors, ExperimentKind};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("invalid configuration:\n{0}")]
    Config(#[from] ConfigErrors),
    #[error(transparent)]
    Core(#[from] movi_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Records(String),
    #[error("{figure} needs records of kind {expected}, found {found}")]
    KindMismatch {
        figure: &'static str,
        expected: ExperimentKind,
        found: ExperimentKind,
    },
    #[error("worker pool: {0}")]
    Pool(String),
}

impl LabError {
    /// Process exit status: 1 for configuration problems, 2 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Config(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| LabError::Io { path, source }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
