//! Named entity recognition on raw, untokenized text.
//!
//! Every character receives an IOBES label from a BiLSTM-CRF whose input
//! representation combines word embeddings aligned down to characters,
//! contextual states from character language models, and a two-level
//! character encoding.

pub mod convert;
pub mod cli;
pub mod crf;
pub mod document;
pub mod error;
pub mod eval;
pub mod model;
pub mod nn;
pub mod represent;
pub mod serial;
pub mod tagging;
pub mod text;

pub use document::{AnnotatedDocument, EntitySpan};
pub use error::{Error, FormatError, Result};
pub use tagging::{labels_from_spans, spans_from_labels, LabelSequence, Tag, TagSet};
pub use text::CharSequence;
