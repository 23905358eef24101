use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, DeblurError>;

#[derive(Debug, Error)]
pub enum DeblurError {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular kernel system: {0}")]
    Singular(String),

    #[error("non-finite energy at {stage} iteration {iteration}")]
    NonFinite { stage: &'static str, iteration: usize },

    #[error("missing result for tile {0}")]
    MissingTile(usize),

    #[error("kernel parse error at line {line}: {msg}")]
    KernelParse { line: usize, msg: String },

    #[error("failed to read image {path}: {msg}")]
    ImageRead { path: PathBuf, msg: String },

    #[error("failed to write image {path}: {msg}")]
    ImageWrite { path: PathBuf, msg: String },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
