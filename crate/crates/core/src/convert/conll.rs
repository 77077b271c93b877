//! CoNLL-style `token<TAB>label` files with a raw-text sidecar.

use std::io::BufRead;

use super::labels::{word_labels_to_char_labels, TokenizedSentence};
use super::transform::TokenTransformTable;
use crate::document::AnnotatedDocument;
use crate::error::{Error, Result};
use crate::tagging::TagSet;

/// One sentence per blank-line-separated block. `-DOCSTART-` lines are
/// ignored. Extra tab-separated columns between token and label are
/// allowed; the label is the last column.
pub fn read_conll(reader: impl BufRead, source_name: &str) -> Result<Vec<TokenizedSentence>> {
    let mut sentences = Vec::new();
    let mut tokens = Vec::new();
    let mut labels = Vec::new();
    let mut flush = |tokens: &mut Vec<String>, labels: &mut Vec<String>, line: usize| -> Result<()> {
        if !tokens.is_empty() {
            let s = TokenizedSentence::new(std::mem::take(tokens), Some(std::mem::take(labels)))
                .map_err(|e| Error::Parse {
                    source_name: source_name.to_string(),
                    line,
                    detail: e.to_string(),
                })?;
            sentences.push(s);
        }
        Ok(())
    };
    let mut last = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        last = i + 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() {
            flush(&mut tokens, &mut labels, i + 1)?;
            continue;
        }
        if trimmed.starts_with("-DOCSTART-") {
            continue;
        }
        let (token, label) = match (trimmed.split_once('\t'), trimmed.rsplit_once('\t')) {
            (Some((tok, _)), Some((_, label))) if !tok.is_empty() && !label.is_empty() => (tok, label),
            _ => {
                return Err(Error::Parse {
                    source_name: source_name.to_string(),
                    line: i + 1,
                    detail: "expected token<TAB>label".into(),
                })
            }
        };
        tokens.push(token.to_string());
        labels.push(label.to_string());
    }
    flush(&mut tokens, &mut labels, last)?;
    Ok(sentences)
}

/// Entity types used by the labels of `sentences`.
pub fn label_types(sentences: &[TokenizedSentence]) -> Vec<String> {
    let mut types: Vec<String> = sentences
        .iter()
        .filter_map(TokenizedSentence::labels)
        .flatten()
        .filter_map(|l| l.split_once('-').map(|(_, t)| t.to_string()))
        .filter(|t| !t.is_empty())
        .collect();
    types.sort();
    types.dedup();
    types
}

/// Converts index-matched sentences and raw lines. Errors carry the
/// sentence number.
pub fn convert_corpus(
    sentences: &[TokenizedSentence],
    raw_lines: &[String],
    table: &TokenTransformTable,
    tags: &TagSet,
) -> Result<Vec<AnnotatedDocument>> {
    if sentences.len() != raw_lines.len() {
        return Err(Error::DocumentMismatch(format!(
            "{} labelled sentences but {} raw lines",
            sentences.len(),
            raw_lines.len()
        )));
    }
    sentences
        .iter()
        .zip(raw_lines)
        .enumerate()
        .map(|(i, (s, raw))| {
            word_labels_to_char_labels(raw, s, table, tags).map_err(|e| {
                Error::DocumentMismatch(format!("sentence {}: {e}", i + 1))
            })
        })
        .collect()
}
