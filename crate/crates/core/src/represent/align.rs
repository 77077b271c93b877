//! Character-to-word alignment and the embedding lookup built on it.

use std::sync::Arc;

use super::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::text::{is_whitespace, CharSequence};

/// What a single character is aligned to.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Word(Arc<str>),
    Whitespace,
    Unk,
}

impl Slot {
    pub fn label(&self) -> &str {
        match self {
            Slot::Word(w) => w,
            Slot::Whitespace => "<WS>",
            Slot::Unk => "<UNK>",
        }
    }
}

/// One slot per character.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Alignment {
    slots: Vec<Slot>,
}

impl Alignment {
    pub fn new(slots: Vec<Slot>) -> Self {
        Self { slots }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }
}

/// Every character of a token takes the token's word (UNK when the table
/// lacks it). Whitespace is always WHITESPACE; anything else left over is
/// UNK. `tokens` are `(start, end)` character offsets.
pub fn tokenize_align(
    text: &CharSequence,
    tokens: &[(usize, usize)],
    table: &EmbeddingTable,
) -> Result<Alignment> {
    let chars = text.chars();
    let mut slots: Vec<Slot> = chars
        .iter()
        .map(|&c| if is_whitespace(c) { Slot::Whitespace } else { Slot::Unk })
        .collect();
    let mut prev_end = 0;
    for (k, &(s, e)) in tokens.iter().enumerate() {
        if s >= e || e > chars.len() {
            return Err(Error::InvalidOffsets(format!(
                "token {k} [{s}, {e}) outside text of length {}",
                chars.len()
            )));
        }
        if s < prev_end {
            return Err(Error::InvalidOffsets(format!(
                "token {k} [{s}, {e}) overlaps or precedes the previous token ending at {prev_end}"
            )));
        }
        prev_end = e;
        let word = text.slice(s..e);
        if !table.contains(&word) {
            continue;
        }
        let word: Arc<str> = word.into();
        for (slot, &c) in slots[s..e].iter_mut().zip(&chars[s..e]) {
            if !is_whitespace(c) {
                *slot = Slot::Word(word.clone());
            }
        }
    }
    Ok(Alignment::new(slots))
}

/// `T × d_w` matrix of the aligned vectors.
pub fn embed_alignment(alignment: &Alignment, table: &EmbeddingTable) -> Matrix {
    let dim = table.dim();
    let mut out = Matrix::zeros(alignment.len(), dim);
    for (t, slot) in alignment.slots().iter().enumerate() {
        let v = match slot {
            Slot::Word(w) => table.get(w).unwrap_or_else(|| table.unk()),
            Slot::Whitespace => table.whitespace(),
            Slot::Unk => table.unk(),
        };
        out.row_mut(t).copy_from_slice(v);
    }
    out
}
