//! Word-level labels projected onto raw character spans.

use super::align::align_tokens_to_raw;
use super::normalize::normalize_with_offsets;
use super::transform::TokenTransformTable;
use crate::document::{AnnotatedDocument, EntitySpan};
use crate::error::{Error, Result};
use crate::tagging::TagSet;

/// Tokens of one sentence with optional word labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenizedSentence {
    tokens: Vec<String>,
    labels: Option<Vec<String>>,
}

impl TokenizedSentence {
    pub fn new(tokens: Vec<String>, labels: Option<Vec<String>>) -> Result<Self> {
        if let Some(i) = tokens.iter().position(String::is_empty) {
            return Err(Error::MalformedLabels {
                index: i,
                detail: "empty token".into(),
            });
        }
        if let Some(l) = &labels {
            if l.len() != tokens.len() {
                return Err(Error::LengthMismatch {
                    what: "word labels",
                    expected: tokens.len(),
                    got: l.len(),
                });
            }
        }
        Ok(Self { tokens, labels })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }
}

/// Entity runs as `(first token, last token, type)`. Accepts BIO and
/// BIOES; a `B` or `I` not followed by a continuation closes its run.
pub fn word_label_runs(labels: &[String]) -> Result<Vec<(usize, usize, String)>> {
    let parse = |i: usize| -> Result<(char, Option<&str>)> {
        let l = labels[i].as_str();
        if l == "O" {
            return Ok(('O', None));
        }
        match l.split_once('-') {
            Some((p @ ("B" | "I" | "E" | "S"), ty)) if !ty.is_empty() => {
                Ok((p.chars().next().expect("prefix"), Some(ty)))
            }
            _ => Err(Error::MalformedLabels {
                index: i,
                detail: format!("unrecognized label {l:?}"),
            }),
        }
    };
    let mut runs = Vec::new();
    let mut open: Option<(usize, &str)> = None;
    for i in 0..labels.len() {
        let (p, ty) = parse(i)?;
        let continues = matches!((open, ty), (Some((_, a)), Some(b)) if a == b);
        match p {
            'I' | 'E' if !continues => {
                return Err(Error::MalformedLabels {
                    index: i,
                    detail: format!("{} does not continue an entity", labels[i]),
                });
            }
            'I' => {}
            'E' => {
                let (s, ty) = open.take().expect("continuing run");
                runs.push((s, i, ty.to_string()));
            }
            _ => {
                if let Some((s, ty)) = open.take() {
                    runs.push((s, i - 1, ty.to_string()));
                }
                match (p, ty) {
                    ('B', Some(ty)) => open = Some((i, ty)),
                    ('S', Some(ty)) => runs.push((i, i, ty.to_string())),
                    _ => {}
                }
            }
        }
    }
    if let Some((s, ty)) = open {
        runs.push((s, labels.len() - 1, ty.to_string()));
    }
    Ok(runs)
}

/// Raw character offsets of each token, found in the normalized raw text
/// and mapped back; falls back to the raw text itself when the tokens do
/// not fit the normalized form.
pub fn token_raw_offsets(
    raw: &str,
    tokens: &[String],
    table: &TokenTransformTable,
) -> Result<Vec<(usize, usize)>> {
    let (normalized, mapping) = normalize_with_offsets(raw);
    match align_tokens_to_raw(normalized.chars(), tokens, table) {
        Ok(offsets) => Ok(offsets
            .into_iter()
            .map(|(s, e)| {
                let r = mapping.raw_span(s, e);
                (r.start, r.end)
            })
            .collect()),
        Err(first) if !mapping.is_identity() => {
            let raw_chars: Vec<char> = raw.chars().collect();
            align_tokens_to_raw(&raw_chars, tokens, table).map_err(|_| first)
        }
        Err(e) => Err(e),
    }
}

/// Character-level annotation of `raw` from a labelled tokenization. Each
/// entity spans from the start of its first token to the end of its last.
pub fn word_labels_to_char_labels(
    raw: &str,
    sentence: &TokenizedSentence,
    table: &TokenTransformTable,
    tags: &TagSet,
) -> Result<AnnotatedDocument> {
    let labels = sentence.labels().ok_or_else(|| Error::MalformedLabels {
        index: 0,
        detail: "sentence has no labels".into(),
    })?;
    let runs = word_label_runs(labels)?;
    for (first, _, ty) in &runs {
        if tags.type_index(ty).is_none() {
            return Err(Error::MalformedLabels {
                index: *first,
                detail: format!("entity type {ty:?} is not in the tag set"),
            });
        }
    }
    let offsets = token_raw_offsets(raw, sentence.tokens(), table)?;
    let spans = runs
        .into_iter()
        .map(|(first, last, etype)| EntitySpan {
            start: offsets[first].0,
            end: offsets[last].1,
            etype,
        })
        .collect();
    AnnotatedDocument::new(raw, spans)
}
