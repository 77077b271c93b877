//! Raw character sequences indexed by Unicode scalar value.

use std::fmt;
use std::ops::Range;

/// An untokenized input, stored as Unicode scalar values so that every
/// offset in the crate counts characters rather than bytes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct CharSequence {
    chars: Vec<char>,
}

impl CharSequence {
    pub fn new(text: &str) -> Self {
        Self {
            chars: text.chars().collect(),
        }
    }

    pub fn from_chars(chars: Vec<char>) -> Self {
        Self { chars }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn get(&self, index: usize) -> Option<char> {
        self.chars.get(index).copied()
    }

    /// Returns the characters in `range` as an owned string.
    pub fn slice(&self, range: Range<usize>) -> String {
        self.chars[range].iter().collect()
    }

    pub fn reversed(&self) -> Self {
        let mut chars = self.chars.clone();
        chars.reverse();
        Self { chars }
    }
}

impl From<&str> for CharSequence {
    fn from(text: &str) -> Self {
        Self::new(text)
    }
}

impl From<String> for CharSequence {
    fn from(text: String) -> Self {
        Self::new(&text)
    }
}

impl fmt::Display for CharSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.chars {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Unicode `White_Space`.
pub fn is_whitespace(c: char) -> bool {
    c.is_whitespace()
}
