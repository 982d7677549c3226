use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column {column} has near-zero norm")]
    ZeroColumn { column: usize },

    #[error("sparsity {sparsity} outside 1..={max}")]
    SparsityOutOfRange { sparsity: usize, max: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("atom {0} is not used by any signal")]
    UnusedAtom(usize),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("need at least {needed} signals, got {got}")]
    TooFewSignals { needed: usize, got: usize },

    #[error("label {0} is not in the class index")]
    UnknownLabel(u64),

    #[error("class {0} has training signals but no dictionary atoms")]
    LabelCoverage(u64),

    #[error("spatiotemporal scale must be positive, got {0}")]
    NonPositiveSigma(f64),

    #[error("regularized system is singular")]
    SingularSystem,

    #[error("box does not overlap the image")]
    NoOverlap,

    #[error("box dimensions must be positive")]
    NonPositiveDims,

    #[error("low-confidence dictionary is empty")]
    EmptyLowDictionary,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("ground truth is empty")]
    EmptyGroundTruth,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error("column {column}: {source}")]
    InColumn {
        column: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("frame {frame}: {source}")]
    InFrame {
        frame: u32,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_column(self, column: usize) -> Self {
        Error::InColumn {
            column,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_frame(self, frame: u32) -> Self {
        Error::InFrame {
            frame,
            source: Box::new(self),
        }
    }
}
