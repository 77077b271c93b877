//! IOBES label alphabet and conversion between entity spans and per-character
//! label sequences.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::document::{AnnotatedDocument, EntitySpan};
use crate::error::{Error, Result};

/// Position of a character inside an entity mention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tag {
    Outside,
    Begin(usize),
    Inside(usize),
    End(usize),
    Single(usize),
}

impl Tag {
    /// Index in the stable layout: `O` is 0 and type `k` owns `4k+1..=4k+4`.
    pub fn index(self) -> usize {
        match self {
            Tag::Outside => 0,
            Tag::Begin(k) => 4 * k + 1,
            Tag::Inside(k) => 4 * k + 2,
            Tag::End(k) => 4 * k + 3,
            Tag::Single(k) => 4 * k + 4,
        }
    }

    pub fn from_index(index: usize) -> Self {
        if index == 0 {
            return Tag::Outside;
        }
        let k = (index - 1) / 4;
        match (index - 1) % 4 {
            0 => Tag::Begin(k),
            1 => Tag::Inside(k),
            2 => Tag::End(k),
            _ => Tag::Single(k),
        }
    }

    pub fn entity_type(self) -> Option<usize> {
        match self {
            Tag::Outside => None,
            Tag::Begin(k) | Tag::Inside(k) | Tag::End(k) | Tag::Single(k) => Some(k),
        }
    }

    /// Whether `next` may follow `self` in an IOBES-valid sequence.
    pub fn may_precede(self, next: Tag) -> bool {
        match self {
            Tag::Begin(k) | Tag::Inside(k) => next == Tag::Inside(k) || next == Tag::End(k),
            Tag::Outside | Tag::End(_) | Tag::Single(_) => {
                matches!(next, Tag::Outside | Tag::Begin(_) | Tag::Single(_))
            }
        }
    }

    pub fn may_start(self) -> bool {
        matches!(self, Tag::Outside | Tag::Begin(_) | Tag::Single(_))
    }

    pub fn may_end(self) -> bool {
        matches!(self, Tag::Outside | Tag::End(_) | Tag::Single(_))
    }
}

/// Ordered entity types and the derived IOBES label alphabet.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TagSet {
    types: Vec<String>,
}

impl TagSet {
    pub fn new<S: Into<String>>(types: impl IntoIterator<Item = S>) -> Result<Self> {
        let types: Vec<String> = types.into_iter().map(Into::into).collect();
        if types.is_empty() {
            return Err(Error::InvalidTagSet("no entity types".into()));
        }
        for (i, t) in types.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::InvalidTagSet(format!("bad type name {t:?}")));
            }
            if types[..i].contains(t) {
                return Err(Error::InvalidTagSet(format!("duplicate type {t:?}")));
            }
        }
        Ok(Self { types })
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    /// `4 * |types| + 1`
    pub fn label_count(&self) -> usize {
        4 * self.types.len() + 1
    }

    pub fn type_index(&self, name: &str) -> Option<usize> {
        self.types.iter().position(|t| t == name)
    }

    pub fn label_name(&self, index: usize) -> String {
        match Tag::from_index(index) {
            Tag::Outside => "O".to_string(),
            Tag::Begin(k) => format!("B-{}", self.types[k]),
            Tag::Inside(k) => format!("I-{}", self.types[k]),
            Tag::End(k) => format!("E-{}", self.types[k]),
            Tag::Single(k) => format!("S-{}", self.types[k]),
        }
    }

    pub fn parse_label(&self, name: &str) -> Option<usize> {
        if name == "O" {
            return Some(0);
        }
        let (prefix, etype) = name.split_once('-')?;
        let k = self.type_index(etype)?;
        let tag = match prefix {
            "B" => Tag::Begin(k),
            "I" => Tag::Inside(k),
            "E" => Tag::End(k),
            "S" => Tag::Single(k),
            _ => return None,
        };
        Some(tag.index())
    }
}

impl TryFrom<Vec<String>> for TagSet {
    type Error = Error;

    fn try_from(types: Vec<String>) -> Result<Self> {
        TagSet::new(types)
    }
}

impl From<TagSet> for Vec<String> {
    fn from(tags: TagSet) -> Self {
        tags.types
    }
}

/// Per-character label indices. Validity is a predicate, not a
/// construction invariant: raw model output may be malformed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelSequence(Vec<usize>);

impl LabelSequence {
    pub fn new(labels: Vec<usize>, tags: &TagSet) -> Result<Self> {
        let count = tags.label_count();
        if let Some((position, &index)) = labels.iter().enumerate().find(|(_, &l)| l >= count) {
            return Err(Error::LabelOutOfRange {
                position,
                index,
                count,
            });
        }
        Ok(Self(labels))
    }

    /// Wraps indices already known to be in range.
    pub fn from_indices(labels: Vec<usize>) -> Self {
        Self(labels)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tags(&self) -> impl Iterator<Item = Tag> + '_ {
        self.0.iter().map(|&i| Tag::from_index(i))
    }

    /// True iff the sequence is accepted by the IOBES transition grammar:
    /// every non-`O` stretch decomposes into `S` and `B I* E` chunks of a
    /// single type each.
    pub fn is_iobes_valid(&self) -> bool {
        let mut prev: Option<Tag> = None;
        for tag in self.tags() {
            let ok = match prev {
                None => tag.may_start(),
                Some(p) => p.may_precede(tag),
            };
            if !ok {
                return false;
            }
            prev = Some(tag);
        }
        prev.map_or(true, Tag::may_end)
    }

    pub fn display<'a>(&'a self, tags: &'a TagSet) -> impl fmt::Display + 'a {
        DisplayLabels { seq: self, tags }
    }
}

struct DisplayLabels<'a> {
    seq: &'a LabelSequence,
    tags: &'a TagSet,
}

impl fmt::Display for DisplayLabels<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &l) in self.seq.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(&self.tags.label_name(l))?;
        }
        Ok(())
    }
}

/// Encodes entity spans as per-character IOBES labels.
pub fn labels_from_spans(doc: &AnnotatedDocument, tags: &TagSet) -> Result<LabelSequence> {
    let mut labels = vec![Tag::Outside.index(); doc.len()];
    let mut previous: Option<&EntitySpan> = None;
    for span in doc.entities() {
        if let Some(prev) = previous {
            if span.start < prev.end {
                return Err(Error::OverlappingSpans {
                    previous: prev.clone(),
                    span: span.clone(),
                });
            }
        }
        if span.start >= span.end || span.end > doc.len() {
            return Err(Error::SpanOutOfBounds {
                span: span.clone(),
                len: doc.len(),
            });
        }
        let k = tags.type_index(&span.etype).ok_or_else(|| Error::UnknownType {
            etype: span.etype.clone(),
        })?;
        if span.len() == 1 {
            labels[span.start] = Tag::Single(k).index();
        } else {
            labels[span.start] = Tag::Begin(k).index();
            for l in &mut labels[span.start + 1..span.end - 1] {
                *l = Tag::Inside(k).index();
            }
            labels[span.end - 1] = Tag::End(k).index();
        }
        previous = Some(span);
    }
    Ok(LabelSequence(labels))
}

/// Strict decoding: emits a span for every well-formed `S` or `B I* E` run
/// of one type; malformed fragments produce nothing.
pub fn spans_from_labels(seq: &LabelSequence, tags: &TagSet) -> Vec<EntitySpan> {
    let labels: Vec<Tag> = seq.tags().collect();
    let mut spans = Vec::new();
    let mut t = 0;
    while t < labels.len() {
        match labels[t] {
            Tag::Single(k) => {
                spans.push(EntitySpan::new(t, t + 1, tags.types()[k].clone()));
                t += 1;
            }
            Tag::Begin(k) => {
                let mut j = t + 1;
                while j < labels.len() && labels[j] == Tag::Inside(k) {
                    j += 1;
                }
                if j < labels.len() && labels[j] == Tag::End(k) {
                    spans.push(EntitySpan::new(t, j + 1, tags.types()[k].clone()));
                    t = j + 1;
                } else {
                    // a broken run; whatever stopped it may start a new chunk
                    t = j;
                }
            }
            _ => t += 1,
        }
    }
    spans
}
