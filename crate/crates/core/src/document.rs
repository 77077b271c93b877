//! Entity spans, annotated documents and the JSONL document format.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::CharSequence;

/// A typed half-open character range `[start, end)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    #[serde(rename = "type")]
    pub etype: String,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, etype: impl Into<String>) -> Self {
        Self {
            start,
            end,
            etype: etype.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// A raw text together with its sorted, non-overlapping entity spans.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedDocument {
    text: CharSequence,
    entities: Vec<EntitySpan>,
}

impl AnnotatedDocument {
    /// Sorts `entities` by start and rejects empty, out-of-bounds or
    /// overlapping spans.
    pub fn new(text: impl Into<CharSequence>, mut entities: Vec<EntitySpan>) -> Result<Self> {
        let text = text.into();
        entities.sort_by(|a, b| (a.start, a.end).cmp(&(b.start, b.end)));
        for span in &entities {
            if span.start >= span.end || span.end > text.len() {
                return Err(Error::SpanOutOfBounds {
                    span: span.clone(),
                    len: text.len(),
                });
            }
        }
        for pair in entities.windows(2) {
            if pair[1].start < pair[0].end {
                return Err(Error::OverlappingSpans {
                    previous: pair[0].clone(),
                    span: pair[1].clone(),
                });
            }
        }
        Ok(Self { text, entities })
    }

    pub fn unannotated(text: impl Into<CharSequence>) -> Self {
        Self {
            text: text.into(),
            entities: Vec::new(),
        }
    }

    pub fn text(&self) -> &CharSequence {
        &self.text
    }

    pub fn entities(&self) -> &[EntitySpan] {
        &self.entities
    }

    pub fn len(&self) -> usize {
        self.text.len()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    pub fn with_entities(&self, entities: Vec<EntitySpan>) -> Result<Self> {
        Self::new(self.text.clone(), entities)
    }
}

#[derive(Serialize, Deserialize)]
struct DocumentRecord {
    text: String,
    #[serde(default)]
    entities: Vec<EntitySpan>,
}

impl Serialize for AnnotatedDocument {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        DocumentRecord {
            text: self.text.to_string(),
            entities: self.entities.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AnnotatedDocument {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let record = DocumentRecord::deserialize(deserializer)?;
        AnnotatedDocument::new(record.text.as_str(), record.entities)
            .map_err(serde::de::Error::custom)
    }
}

/// Reads one document per non-blank line.
pub fn read_jsonl(reader: impl BufRead, source_name: &str) -> Result<Vec<AnnotatedDocument>> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc = serde_json::from_str(&line).map_err(|e| Error::Parse {
            source_name: source_name.to_string(),
            line: i + 1,
            detail: e.to_string(),
        })?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_jsonl<'a>(
    mut writer: impl Write,
    docs: impl IntoIterator<Item = &'a AnnotatedDocument>,
) -> Result<()> {
    for doc in docs {
        serde_json::to_writer(&mut writer, doc)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_overlap_and_identifies_spans() {
        let err = AnnotatedDocument::new(
            "abcdef",
            vec![EntitySpan::new(0, 3, "PER"), EntitySpan::new(2, 4, "LOC")],
        )
        .unwrap_err();
        match err {
            Error::OverlappingSpans { previous, span } => {
                assert_eq!(previous, EntitySpan::new(0, 3, "PER"));
                assert_eq!(span, EntitySpan::new(2, 4, "LOC"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_out_of_bounds() {
        assert!(matches!(
            AnnotatedDocument::new("ab", vec![EntitySpan::new(1, 3, "PER")]),
            Err(Error::SpanOutOfBounds { .. })
        ));
        assert!(matches!(
            AnnotatedDocument::new("ab", vec![EntitySpan::new(1, 1, "PER")]),
            Err(Error::SpanOutOfBounds { .. })
        ));
    }

    #[test]
    fn sorts_spans() {
        let doc = AnnotatedDocument::new(
            "ab cd",
            vec![EntitySpan::new(3, 5, "LOC"), EntitySpan::new(0, 2, "PER")],
        )
        .unwrap();
        assert_eq!(doc.entities()[0].start, 0);
    }

    #[test]
    fn jsonl_uses_scalar_offsets() {
        let line = r#"{"text":"Ünïcode Lakers","entities":[{"start":8,"end":14,"type":"ORG"}]}"#;
        let docs = read_jsonl(line.as_bytes(), "inline").unwrap();
        assert_eq!(docs[0].text().slice(8..14), "Lakers");
        let mut out = Vec::new();
        write_jsonl(&mut out, &docs).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().trim_end(), line);
    }

    #[test]
    fn jsonl_reports_line_numbers() {
        let input = "{\"text\":\"a\",\"entities\":[]}\n\n{\"text\":\"ab\",\"entities\":[{\"start\":0,\"end\":5,\"type\":\"X\"}]}\n";
        match read_jsonl(input.as_bytes(), "f.jsonl") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
