//! HTML unescaping and NFKC normalization that remember where every output
//! character came from.

use std::ops::Range;

use unicode_normalization::char::canonical_combining_class;
use unicode_normalization::{is_nfkc_quick, IsNormalized, UnicodeNormalization};

use crate::text::CharSequence;

/// Maps each processed character to the raw character range it came from.
///
/// Characters produced from the same raw stretch (an entity such as
/// `&amp;`, or a compatibility character that expands) share that stretch;
/// otherwise ranges are disjoint and increasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexMapping {
    ranges: Vec<Range<usize>>,
    raw_len: usize,
}

impl IndexMapping {
    pub fn identity(len: usize) -> Self {
        Self {
            ranges: (0..len).map(|i| i..i + 1).collect(),
            raw_len: len,
        }
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn raw_len(&self) -> usize {
        self.raw_len
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn is_identity(&self) -> bool {
        self.raw_len == self.ranges.len() && self.ranges.iter().enumerate().all(|(i, r)| *r == (i..i + 1))
    }

    /// Raw range covering processed characters `[start, end)`.
    pub fn raw_span(&self, start: usize, end: usize) -> Range<usize> {
        debug_assert!(start < end && end <= self.ranges.len());
        self.ranges[start].start..self.ranges[end - 1].end
    }

    fn compose(&self, inner: &[Range<usize>]) -> IndexMapping {
        IndexMapping {
            ranges: inner
                .iter()
                .map(|r| self.ranges[r.start].start..self.ranges[r.end - 1].end)
                .collect(),
            raw_len: self.raw_len,
        }
    }
}

const MAX_ENTITY_LEN: usize = 32;

/// Decodes `&name;`, `&#n;` and `&#xh;` entities. Anything that does not
/// decode is kept verbatim.
pub fn html_unescape_with_offsets(raw: &[char]) -> (Vec<char>, IndexMapping) {
    let mut out = Vec::with_capacity(raw.len());
    let mut ranges = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        if raw[i] == '&' {
            let semi = raw[i + 1..]
                .iter()
                .take(MAX_ENTITY_LEN)
                .position(|&c| c == ';' || c == '&' || c.is_whitespace());
            if let Some(off) = semi.filter(|&off| raw[i + 1 + off] == ';' && off > 0) {
                let end = i + off + 2;
                let candidate: String = raw[i..end].iter().collect();
                let decoded = html_escape::decode_html_entities(&candidate);
                if decoded != candidate {
                    for c in decoded.chars() {
                        out.push(c);
                        ranges.push(i..end);
                    }
                    i = end;
                    continue;
                }
            }
        }
        out.push(raw[i]);
        ranges.push(i..i + 1);
        i += 1;
    }
    (
        out,
        IndexMapping {
            ranges,
            raw_len: raw.len(),
        },
    )
}

/// Whether normalization never merges `c` with what precedes it.
fn starts_segment(c: char) -> bool {
    match std::iter::once(c).nfkd().next() {
        None => true,
        Some(f) => {
            canonical_combining_class(f) == 0
                && is_nfkc_quick(std::iter::once(f)) != IsNormalized::Maybe
        }
    }
}

/// NFKC applied segment by segment, where a segment is a starter and the
/// characters that may combine with it.
pub fn nfkc_with_offsets(chars: &[char]) -> (Vec<char>, Vec<Range<usize>>) {
    let mut out = Vec::with_capacity(chars.len());
    let mut ranges = Vec::with_capacity(chars.len());
    let mut start = 0;
    for i in 1..=chars.len() {
        if i == chars.len() || starts_segment(chars[i]) {
            let before = out.len();
            out.extend(chars[start..i].iter().copied().nfkc());
            ranges.extend((before..out.len()).map(|_| start..i));
            start = i;
        }
    }
    (out, ranges)
}

/// HTML unescaping followed by NFKC, with the composed index mapping.
pub fn normalize_with_offsets(raw: &str) -> (CharSequence, IndexMapping) {
    let raw: Vec<char> = raw.chars().collect();
    let (unescaped, outer) = html_unescape_with_offsets(&raw);
    let (normalized, inner) = nfkc_with_offsets(&unescaped);
    (CharSequence::from_chars(normalized), outer.compose(&inner))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn entity_maps_to_whole_raw_range() {
        let (text, map) = normalize_with_offsets("&amp;");
        assert_eq!(text.to_string(), "&");
        assert_eq!(map.ranges(), &[0..5]);
        let (text, map) = normalize_with_offsets("a&lt;b&#39;");
        assert_eq!(text.to_string(), "a<b'");
        assert_eq!(map.ranges(), &[0..1, 1..5, 5..6, 6..11]);
    }

    #[test]
    fn fullwidth_folds() {
        let (text, map) = normalize_with_offsets("Ｎ");
        assert_eq!(text.to_string(), "N");
        assert_eq!(map.ranges(), &[0..1]);
    }

    #[test]
    fn plain_text_is_identity() {
        let (text, map) = normalize_with_offsets("NBA Finals, 2019!");
        assert_eq!(text.to_string(), "NBA Finals, 2019!");
        assert!(map.is_identity());
    }

    #[test]
    fn malformed_entities_pass_through() {
        for s in ["&", "&amp", "& amp;", "&nosuch;", "&;", "&&amp;"] {
            let (text, _) = normalize_with_offsets(s);
            let expected = if s == "&&amp;" { "&&" } else { s };
            assert_eq!(text.to_string(), expected, "{s:?}");
        }
    }

    #[test]
    fn expansions_and_compositions() {
        let (text, map) = normalize_with_offsets("x…");
        assert_eq!(text.to_string(), "x...");
        assert_eq!(map.ranges(), &[0..1, 1..2, 1..2, 1..2]);
        let (text, map) = normalize_with_offsets("e\u{301}!");
        assert_eq!(text.to_string(), "é!");
        assert_eq!(map.ranges(), &[0..2, 2..3]);
        let (text, map) = normalize_with_offsets("ｶﾞ");
        assert_eq!(text.to_string(), "ガ");
        assert_eq!(map.ranges(), &[0..2]);
    }

    proptest! {
        #[test]
        fn matches_whole_string_nfkc_and_is_monotonic(s in "([a-z &;#0-9]|&amp;|&lt;|e\u{301}|\u{FF76}\u{FF9E}|\u{2026}|\u{FB01}|\u{1100}\u{1161}|\u{0F73}|\u{0344}){0,20}") {
            let (text, map) = normalize_with_offsets(&s);
            let unescaped = html_escape::decode_html_entities(&s).to_string();
            let reference: String = unescaped.nfkc().collect();
            prop_assert_eq!(text.to_string(), reference);
            prop_assert_eq!(map.len(), text.len());
            for w in map.ranges().windows(2) {
                prop_assert!(w[0] == w[1] || w[0].end <= w[1].start);
            }
            for r in map.ranges() {
                prop_assert!(r.start < r.end && r.end <= map.raw_len());
            }
        }
    }
}
