use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate cloud: all points coincide")]
    DegenerateCloud,

    #[error("empty matching: total match weight is below the denominator guard")]
    EmptyMatching,

    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("dimension mismatch: model is {model}-D, scene is {scene}-D")]
    DimensionMismatch { model: usize, scene: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid trial specification: {0}")]
    InvalidTrial(String),

    #[error("ground-truth pair list is empty")]
    EmptyGroundTruth,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
