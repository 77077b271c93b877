use std::path::PathBuf;

use thiserror::Error;

use crate::document::EntitySpan;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{0}: empty sequence")]
    EmptySequence(&'static str),

    #[error("span {span:?} overlaps span {previous:?}")]
    OverlappingSpans {
        previous: EntitySpan,
        span: EntitySpan,
    },

    #[error("span {span:?} is out of bounds for text of length {len}")]
    SpanOutOfBounds { span: EntitySpan, len: usize },

    #[error("unknown entity type {etype:?}")]
    UnknownType { etype: String },

    #[error("invalid tag set: {0}")]
    InvalidTagSet(String),

    #[error("label index {index} at position {position} is outside [0, {count})")]
    LabelOutOfRange {
        position: usize,
        index: usize,
        count: usize,
    },

    #[error("probability {0} is outside [0, 1)")]
    InvalidProbability(f64),

    #[error("non-finite gradient in parameter {param}")]
    NonFiniteGradient { param: String },

    #[error("non-finite loss: {0}")]
    NonFiniteLoss(f64),

    #[error("invalid offsets: {0}")]
    InvalidOffsets(String),

    #[error("cannot align token {index} ({token:?}) near {context:?}")]
    TokenAlignment {
        index: usize,
        token: String,
        context: String,
    },

    #[error("malformed word labels at token {index}: {detail}")]
    MalformedLabels { index: usize, detail: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("{source_name}:{line}: {detail}")]
    Parse {
        source_name: String,
        line: usize,
        detail: String,
    },

    #[error("document mismatch: {0}")]
    DocumentMismatch(String),

    #[error("model format: {0}")]
    ModelFormat(#[from] FormatError),

    #[error("training diverged at epoch {epoch}, step {step}: {detail}")]
    Training {
        epoch: usize,
        step: usize,
        detail: String,
    },

    #[error("configuration: {0}")]
    Config(String),

    #[error("resource not found: {}", .0.display())]
    ResourceNotFound(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Distinct failure modes when reading a serialized model or language model.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("unsupported version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("width chain inconsistent: {0}")]
    WidthChain(String),

    #[error("module order mismatch: file lists {found:?}, parameters imply {expected:?}")]
    ModuleOrder {
        found: Vec<String>,
        expected: Vec<String>,
    },

    #[error("truncated file: {0}")]
    Truncated(String),

    #[error("invalid tensor {name}: {detail}")]
    Tensor { name: String, detail: String },

    #[error("{0}")]
    Other(String),
}

impl Error {
    /// Stable, machine-parseable class used by the command line front end.
    pub fn class(&self) -> &'static str {
        match self {
            Error::ResourceNotFound(_) => "resource-not-found",
            Error::Io(_) => "io",
            Error::Json(_) | Error::Parse { .. } => "parse",
            Error::ModelFormat(_) => "model-format",
            Error::Config(_) => "config",
            Error::Training { .. } | Error::NonFiniteLoss(_) | Error::NonFiniteGradient { .. } => {
                "training"
            }
            Error::TokenAlignment { .. } | Error::MalformedLabels { .. } => "conversion",
            Error::EmptyCorpus => "empty-corpus",
            Error::DocumentMismatch(_) => "document-mismatch",
            _ => "invalid-input",
        }
    }
}
