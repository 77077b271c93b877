//! Self-describing JSON model files.
//!
//! A file carries a format tag and version, the configuration, the list of
//! representation modules with their widths in concatenation order, the
//! frozen resources (embeddings, dictionary, language models) and every
//! trainable tensor as base64 little-endian `f64`. Loading checks the
//! version, the module order and the width chain before any tensor is
//! trusted.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AlignmentMode, ModelConfig, NeuralCharCrf};
use crate::crf::CrfParams;
use crate::error::{Error, FormatError, Result};
use crate::nn::{BiLstm, Linear, LstmCell, Module};
use crate::represent::lm::LmRecord;
use crate::represent::{
    CharCategory, CharEncoder, CharLm, CharVocab, ContextProjection, EmbeddingTable,
    IdfDictionary, RepresentationKind,
};
use crate::serial::{write_atomic, TensorReader, TensorRecord};
use crate::tagging::TagSet;

pub const MODEL_FORMAT: &str = "rawner-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuleRecord {
    pub kind: RepresentationKind,
    pub width: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct EmbeddingRecord {
    words: Vec<String>,
    vectors: TensorRecord,
    unk: TensorRecord,
    whitespace: TensorRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct DictionaryRecord {
    doc_count: Option<usize>,
    entries: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct LanguageModels {
    forward: LmRecord,
    backward: LmRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRecord {
    format: String,
    version: u32,
    config: ModelConfig,
    modules: Vec<ModuleRecord>,
    input_width: usize,
    lstm_hidden: usize,
    label_count: usize,
    char_vocab: Option<String>,
    embeddings: Option<EmbeddingRecord>,
    dictionary: Option<DictionaryRecord>,
    language_models: Option<LanguageModels>,
    tensors: Vec<TensorRecord>,
}

fn expected_modules(config: &ModelConfig) -> Vec<RepresentationKind> {
    let mut kinds = Vec::new();
    if config.alignment != AlignmentMode::None {
        kinds.push(RepresentationKind::WordEmbedding);
    }
    if config.contextual {
        kinds.push(RepresentationKind::Contextual);
    }
    if config.char_encoding {
        kinds.push(RepresentationKind::CharEncoding);
    }
    kinds
}

fn kind_names(kinds: impl IntoIterator<Item = RepresentationKind>) -> Vec<String> {
    kinds
        .into_iter()
        .map(|k| serde_json::to_value(k).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
        .collect()
}

fn wrap(e: Error) -> FormatError {
    match e {
        Error::ModelFormat(f) => f,
        other => FormatError::WidthChain(other.to_string()),
    }
}

impl NeuralCharCrf {
    fn to_record(&self) -> ModelRecord {
        let embeddings = self.embeddings.as_ref().map(|e| EmbeddingRecord {
            words: e.words().to_vec(),
            vectors: TensorRecord::from_matrix("embeddings.vectors", e.vectors()),
            unk: TensorRecord::from_matrix(
                "embeddings.unk",
                &crate::nn::Matrix::from_vec(1, e.dim(), e.unk().to_vec()).expect("row"),
            ),
            whitespace: TensorRecord::from_matrix(
                "embeddings.whitespace",
                &crate::nn::Matrix::from_vec(1, e.dim(), e.whitespace().to_vec()).expect("row"),
            ),
        });
        ModelRecord {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config: self.config.clone(),
            modules: self
                .modules()
                .into_iter()
                .map(|(kind, width)| ModuleRecord { kind, width })
                .collect(),
            input_width: self.bilstm.input(),
            lstm_hidden: self.bilstm.hidden(),
            label_count: self.crf.label_count(),
            char_vocab: self.char_encoder.as_ref().map(|c| c.vocab.chars().iter().collect()),
            embeddings,
            dictionary: self.dictionary.as_ref().map(|d| DictionaryRecord {
                doc_count: d.doc_count(),
                entries: d.iter().map(|(w, v)| (w.to_string(), v)).collect(),
            }),
            language_models: self.lms.as_ref().map(|(f, b)| LanguageModels {
                forward: f.to_record(),
                backward: b.to_record(),
            }),
            tensors: self.parameters().into_iter().map(TensorRecord::from_parameter).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_record())?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(Self::from_json_inner(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::ResourceNotFound(path.to_path_buf()));
        }
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn from_json_inner(s: &str) -> Result<Self, FormatError> {
        let value: serde_json::Value = serde_json::from_str(s).map_err(|e| {
            if e.is_eof() {
                FormatError::Truncated(format!("model file ends early: {e}"))
            } else {
                FormatError::Other(format!("model file is not valid JSON: {e}"))
            }
        })?;
        if value.get("format").and_then(|v| v.as_str()) != Some(MODEL_FORMAT) {
            return Err(FormatError::Other("not a model file (missing format tag)".into()));
        }
        let version = value.get("version").and_then(|v| v.as_u64());
        if version != Some(u64::from(MODEL_VERSION)) {
            return Err(FormatError::Version {
                found: version.map_or(0, |v| v as u32),
                expected: MODEL_VERSION,
            });
        }
        let rec: ModelRecord = serde_json::from_value(value)
            .map_err(|e| FormatError::Other(format!("malformed model file: {e}")))?;
        Self::from_record(rec)
    }

    fn from_record(rec: ModelRecord) -> Result<Self, FormatError> {
        let config = rec.config;
        config.validate().map_err(|e| FormatError::Other(e.to_string()))?;
        let found: Vec<RepresentationKind> = rec.modules.iter().map(|m| m.kind).collect();
        let expected = expected_modules(&config);
        if found != expected {
            return Err(FormatError::ModuleOrder {
                found: kind_names(found),
                expected: kind_names(expected),
            });
        }
        let sum: usize = rec.modules.iter().map(|m| m.width).sum();
        if sum != rec.input_width {
            return Err(FormatError::WidthChain(format!(
                "module widths sum to {sum} but input_width is {}",
                rec.input_width
            )));
        }
        let tags = TagSet::new(config.types.clone()).map_err(|e| FormatError::Other(e.to_string()))?;
        if rec.label_count != tags.label_count() {
            return Err(FormatError::WidthChain(format!(
                "label_count {} does not match {} labels of the tag set",
                rec.label_count,
                tags.label_count()
            )));
        }
        let width_of = |kind| rec.modules.iter().find(|m| m.kind == kind).map(|m| m.width);
        let width_err = |what: &str, declared: usize, actual: usize| {
            FormatError::WidthChain(format!("{what} module declares width {declared} but has {actual}"))
        };

        let embeddings = match (width_of(RepresentationKind::WordEmbedding), rec.embeddings) {
            (None, None) => None,
            (Some(w), Some(e)) => {
                let vectors = e.vectors.to_matrix()?;
                let unk = e.unk.to_matrix()?;
                let ws = e.whitespace.to_matrix()?;
                if vectors.cols() != w || unk.shape() != (1, w) || ws.shape() != (1, w) {
                    return Err(width_err("word embedding", w, vectors.cols()));
                }
                if vectors.rows() != e.words.len() {
                    return Err(FormatError::Truncated(format!(
                        "{} embedding rows for {} words",
                        vectors.rows(),
                        e.words.len()
                    )));
                }
                let entries = e
                    .words
                    .into_iter()
                    .enumerate()
                    .map(|(i, word)| (word, vectors.row(i).to_vec()))
                    .collect();
                Some(
                    EmbeddingTable::with_sentinels(w, entries, unk.into_data(), ws.into_data())
                        .map_err(wrap)?,
                )
            }
            _ => return Err(FormatError::Other("word embeddings do not match the module list".into())),
        };
        let dictionary = match (config.alignment, rec.dictionary) {
            (AlignmentMode::Match, Some(d)) => Some(IdfDictionary::from_entries(d.entries, d.doc_count)),
            (AlignmentMode::Match, None) => {
                return Err(FormatError::Truncated("match alignment without a dictionary".into()))
            }
            _ => None,
        };
        let lms = match (width_of(RepresentationKind::Contextual), rec.language_models) {
            (None, None) => None,
            (Some(_), Some(l)) => Some((CharLm::from_record(l.forward)?, CharLm::from_record(l.backward)?)),
            _ => return Err(FormatError::Other("language models do not match the module list".into())),
        };

        let mut r = TensorReader::new(rec.tensors);
        let projection = match (width_of(RepresentationKind::Contextual), &lms) {
            (Some(w), Some((f, _))) => {
                let h2 = 2 * f.hidden();
                let weight = r.next("context.weight", Some((w, h2)))?;
                let bias = r.next("context.bias", Some((1, w)))?;
                Some(ContextProjection::from_linear(Linear::from_parts(weight, Some(bias)).map_err(wrap)?).map_err(wrap)?)
            }
            _ => None,
        };
        let char_encoder = match width_of(RepresentationKind::CharEncoding) {
            Some(w) => {
                let vocab = CharVocab::new(rec.char_vocab.unwrap_or_default().chars());
                if config.char_dim + config.type_dim != w {
                    return Err(width_err("character encoding", w, config.char_dim + config.type_dim));
                }
                let ce = r.next("chars.char_emb", Some((vocab.size(), config.char_dim)))?;
                let te = r.next("chars.type_emb", Some((CharCategory::COUNT, config.type_dim)))?;
                Some(CharEncoder::from_parts(vocab, ce, te).map_err(wrap)?)
            }
            None => None,
        };
        let (input, h) = (rec.input_width, rec.lstm_hidden);
        let mut cell = |dir: &str| -> Result<LstmCell, FormatError> {
            let w_ih = r.next(&format!("bilstm.{dir}.w_ih"), Some((4 * h, input)))?;
            let w_hh = r.next(&format!("bilstm.{dir}.w_hh"), Some((4 * h, h)))?;
            let bias = r.next(&format!("bilstm.{dir}.bias"), Some((1, 4 * h)))?;
            LstmCell::from_parts(w_ih, w_hh, bias).map_err(wrap)
        };
        let forward = cell("fwd")?;
        let backward = cell("bwd")?;
        let bilstm = BiLstm { forward, backward };
        let l = rec.label_count;
        let emission = r.next("crf.emission.weight", Some((l, 2 * h)))?;
        let transitions = r.next("crf.transitions", Some((l + 1, l + 1)))?;
        r.finish()?;
        let crf = CrfParams::from_parts(Linear::from_parts(emission, None).map_err(wrap)?, transitions)
            .map_err(wrap)?;
        Self::assemble(config, tags, embeddings, dictionary, lms, projection, char_encoder, bilstm, crf)
            .map_err(wrap)
    }
}
