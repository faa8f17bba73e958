use std::path::PathBuf;

use crate::kspace::Layout;

/// Errors raised anywhere in the restoration pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("format error at byte {offset}: {reason}")]
    Format { offset: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("layout error: expected {expected:?}, found {found:?}")]
    Layout { expected: Layout, found: Layout },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("motion plan error: {0}")]
    Plan(String),

    #[error("stitching error: {0}")]
    Stitch(String),

    #[error("invalid model configuration: {0}")]
    Config(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("non-finite loss in epoch {epoch}, batch pairs: {pairs:?}")]
    NonFiniteLoss { epoch: usize, pairs: Vec<String> },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
