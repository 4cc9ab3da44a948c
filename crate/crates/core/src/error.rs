use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("layer {layer}: expected input width {expected}, got {actual}")]
    DimensionMismatch {
        layer: String,
        expected: usize,
        actual: usize,
    },

    #[error("shape mismatch in {context}: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        context: String,
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("batch normalization in train mode needs at least 2 samples, got {0}")]
    BatchTooSmall(usize),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("no positive samples; cannot train this appliance")]
    NoPositiveSamples,

    #[error("dataset contains a single class ({0}); training needs both")]
    SingleClass(u8),

    #[error("series is degenerate: {0}; set the threshold manually")]
    DegenerateSeries(String),

    #[error("missing channel files in {dir}: {missing:?}")]
    MissingChannels { dir: PathBuf, missing: Vec<String> },

    #[error("unknown appliance {name:?}; configured appliances: {known:?}")]
    UnknownAppliance { name: String, known: Vec<String> },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("checkpoint version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
