//! Dictionary matching over raw text and IDF-prioritized match selection.
//!
//! Every dictionary occurrence in the text is a candidate, overlaps
//! included. Each character is then claimed by the highest-priority match
//! covering it, where priority is IDF (descending), then match length
//! (descending), then start (ascending), then the word itself. Claims are
//! made by sweeping matches in priority order through a "next unclaimed
//! position" disjoint-set forest, so each character is touched once.

use std::cmp::Ordering;
use std::sync::Arc;

use aho_corasick::{AhoCorasick, MatchKind};
use unicode_normalization::UnicodeNormalization;

use super::align::{Alignment, Slot};
use super::idf::IdfDictionary;
use crate::error::{Error, Result};
use crate::text::{is_whitespace, CharSequence};

/// A dictionary word occurring at `[start, end)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Match {
    pub start: usize,
    pub end: usize,
    pub word: Arc<str>,
    pub idf: f64,
}

impl Match {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Total order used to decide which match claims a character; `Less`
/// means higher priority.
pub fn priority(a: &Match, b: &Match) -> Ordering {
    b.idf
        .total_cmp(&a.idf)
        .then_with(|| b.len().cmp(&a.len()))
        .then_with(|| a.start.cmp(&b.start))
        .then_with(|| a.word.cmp(&b.word))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseMode {
    /// Exact (case-sensitive) matching only.
    #[default]
    Sensitive,
    /// Also match lowercased text against lowercased keys wherever no exact
    /// match exists for the same range.
    LowercaseFallback,
}

/// Per-character NFKC folding. Characters whose compatibility form is not
/// a single scalar are kept as they are, so offsets never shift.
pub fn fold_char(c: char) -> char {
    let mut it = std::iter::once(c).nfkc();
    match (it.next(), it.next()) {
        (Some(n), None) => n,
        _ => c,
    }
}

fn lower_char(c: char) -> char {
    let mut it = c.to_lowercase();
    match (it.next(), it.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

struct Pass {
    automaton: AhoCorasick,
    keys: Vec<(Arc<str>, f64)>,
    fold: fn(char) -> char,
}

fn fold_exact(c: char) -> char {
    fold_char(c)
}

fn fold_lower(c: char) -> char {
    lower_char(fold_char(c))
}

impl Pass {
    fn new(dict: &IdfDictionary, fold: fn(char) -> char) -> Result<Self> {
        let mut patterns = Vec::with_capacity(dict.len());
        let mut keys = Vec::with_capacity(dict.len());
        for (w, idf) in dict.iter() {
            patterns.push(w.chars().map(fold).collect::<String>());
            keys.push((w.clone(), idf));
        }
        let automaton = AhoCorasick::builder()
            .match_kind(MatchKind::Standard)
            .build(&patterns)
            .map_err(|e| Error::Config(format!("cannot build matcher: {e}")))?;
        Ok(Self {
            automaton,
            keys,
            fold,
        })
    }

    fn scan(&self, text: &CharSequence, out: &mut Vec<Match>) {
        let folded: String = text.chars().iter().map(|&c| (self.fold)(c)).collect();
        // byte offset -> char index; only char boundaries are ever looked up
        let mut char_at = vec![0usize; folded.len() + 1];
        for (ci, (bi, _)) in folded.char_indices().enumerate() {
            char_at[bi] = ci;
        }
        char_at[folded.len()] = text.len();
        for m in self.automaton.find_overlapping_iter(&folded) {
            let (word, idf) = &self.keys[m.pattern().as_usize()];
            out.push(Match {
                start: char_at[m.start()],
                end: char_at[m.end()],
                word: word.clone(),
                idf: *idf,
            });
        }
    }
}

/// Multi-pattern matcher built once per dictionary.
pub struct Matcher {
    exact: Pass,
    lower: Option<Pass>,
}

impl Matcher {
    pub fn new(dict: &IdfDictionary, mode: CaseMode) -> Result<Self> {
        Ok(Self {
            exact: Pass::new(dict, fold_exact)?,
            lower: match mode {
                CaseMode::Sensitive => None,
                CaseMode::LowercaseFallback => Some(Pass::new(dict, fold_lower)?),
            },
        })
    }

    /// All dictionary occurrences, sorted by `(start, end, word)`.
    pub fn find_matches(&self, text: &CharSequence) -> Vec<Match> {
        let mut out = Vec::new();
        self.exact.scan(text, &mut out);
        if let Some(lower) = &self.lower {
            let mut extra = Vec::new();
            lower.scan(text, &mut extra);
            let covered: std::collections::HashSet<(usize, usize)> =
                out.iter().map(|m| (m.start, m.end)).collect();
            out.extend(
                extra
                    .into_iter()
                    .filter(|m| !covered.contains(&(m.start, m.end))),
            );
        }
        out.sort_by(|a, b| {
            (a.start, a.end)
                .cmp(&(b.start, b.end))
                .then_with(|| a.word.cmp(&b.word))
        });
        out.dedup_by(|a, b| a.start == b.start && a.end == b.end && a.word == b.word);
        out
    }
}

/// Case-sensitive matching with a one-off automaton.
pub fn find_matches(text: &CharSequence, dict: &IdfDictionary) -> Result<Vec<Match>> {
    Ok(Matcher::new(dict, CaseMode::Sensitive)?.find_matches(text))
}

/// Disjoint sets over positions `0..=T`. Each set is a run of claimed
/// positions followed by the first unclaimed one, which the root records.
struct NextFree {
    parent: Vec<usize>,
    rank: Vec<u8>,
    next: Vec<usize>,
}

impl NextFree {
    fn new(len: usize) -> Self {
        Self {
            parent: (0..=len).collect(),
            rank: vec![0; len + 1],
            next: (0..=len).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            let grand = self.parent[self.parent[x]];
            self.parent[x] = grand;
            x = grand;
        }
        x
    }

    /// First unclaimed position `>= x`.
    fn next_free(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.next[r]
    }

    /// Marks `x` claimed by merging its set into the one holding `x + 1`.
    fn claim(&mut self, x: usize) {
        let a = self.find(x);
        let b = self.find(x + 1);
        let next = self.next[b];
        let root = match self.rank[a].cmp(&self.rank[b]) {
            Ordering::Less => {
                self.parent[a] = b;
                b
            }
            Ordering::Greater => {
                self.parent[b] = a;
                a
            }
            Ordering::Equal => {
                self.parent[b] = a;
                self.rank[a] += 1;
                a
            }
        };
        self.next[root] = next;
    }
}

/// Assigns every character to its highest-priority covering match;
/// uncovered characters become WHITESPACE or UNK.
pub fn select_matches(matches: &[Match], text: &CharSequence) -> Result<Alignment> {
    let len = text.len();
    if let Some(m) = matches.iter().find(|m| m.start >= m.end || m.end > len) {
        return Err(Error::InvalidOffsets(format!(
            "match {:?} [{}, {}) outside text of length {len}",
            m.word, m.start, m.end
        )));
    }
    let mut order: Vec<usize> = (0..matches.len()).collect();
    order.sort_by(|&a, &b| priority(&matches[a], &matches[b]));

    let mut owner: Vec<Option<usize>> = vec![None; len];
    let mut free = NextFree::new(len);
    for &mi in &order {
        let m = &matches[mi];
        let mut i = free.next_free(m.start);
        while i < m.end {
            owner[i] = Some(mi);
            free.claim(i);
            i = free.next_free(i + 1);
        }
    }
    let slots = owner
        .into_iter()
        .zip(text.chars())
        .map(|(o, &c)| match o {
            Some(mi) => Slot::Word(matches[mi].word.clone()),
            None if is_whitespace(c) => Slot::Whitespace,
            None => Slot::Unk,
        })
        .collect();
    Ok(Alignment::new(slots))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::seeded_rng;
    use rand::Rng;

    fn m(start: usize, end: usize, word: &str, idf: f64) -> Match {
        Match {
            start,
            end,
            word: word.into(),
            idf,
        }
    }

    fn spans(ms: &[Match]) -> Vec<(usize, usize, String)> {
        ms.iter().map(|m| (m.start, m.end, m.word.to_string())).collect()
    }

    #[test]
    fn nested_dictionary_words_both_match() {
        let dict = IdfDictionary::from_entries([("NB", 3.0), ("NBA", 5.0)], None);
        let ms = find_matches(&CharSequence::new("NBA"), &dict).unwrap();
        assert_eq!(
            spans(&ms),
            vec![(0, 2, "NB".into()), (0, 3, "NBA".into())]
        );
    }

    #[test]
    fn absent_word_has_no_matches() {
        let dict = IdfDictionary::from_entries([("Raptors", 3.0)], None);
        assert!(find_matches(&CharSequence::new("Lakers"), &dict).unwrap().is_empty());
    }

    /// O(T · |dict| · maxlen) scan.
    fn naive_matches(text: &CharSequence, dict: &IdfDictionary) -> Vec<(usize, usize, String)> {
        let chars: Vec<char> = text.chars().iter().map(|&c| fold_char(c)).collect();
        let mut out = Vec::new();
        for start in 0..chars.len() {
            for (w, _) in dict.iter() {
                let wc: Vec<char> = w.chars().map(fold_char).collect();
                if start + wc.len() <= chars.len() && chars[start..start + wc.len()] == wc[..] {
                    out.push((start, start + wc.len(), w.to_string()));
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn overlapping_occurrences() {
        let dict = IdfDictionary::from_entries([("aa", 1.0)], None);
        let text = CharSequence::new("aaa");
        let ms = find_matches(&text, &dict).unwrap();
        assert_eq!(spans(&ms), naive_matches(&text, &dict));
        assert_eq!(spans(&ms), vec![(0, 2, "aa".into()), (1, 3, "aa".into())]);
    }

    #[test]
    fn automaton_equals_naive_scan() {
        for seed in 0..100 {
            let mut rng = seeded_rng(seed);
            let alphabet = ['a', 'b', 'c', ' ', 'é', 'Ａ'];
            let text: String = (0..rng.gen_range(0..60))
                .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
                .collect();
            let words: Vec<(String, f64)> = (0..rng.gen_range(1..8))
                .map(|_| {
                    let w: String = (0..rng.gen_range(1..4))
                        .map(|_| ['a', 'b', 'c', 'A'][rng.gen_range(0..4)])
                        .collect();
                    (w, 1.0)
                })
                .collect();
            let dict = IdfDictionary::from_entries(words, None);
            let text = CharSequence::new(&text);
            let mut got = spans(&find_matches(&text, &dict).unwrap());
            got.sort();
            assert_eq!(got, naive_matches(&text, &dict), "seed {seed}");
        }
    }

    #[test]
    fn nfkc_folding_keeps_offsets() {
        let dict = IdfDictionary::from_entries([("NBA", 1.0)], None);
        let ms = find_matches(&CharSequence::new("go ＮＢＡ!"), &dict).unwrap();
        assert_eq!(spans(&ms), vec![(3, 6, "NBA".into())]);
    }

    #[test]
    fn lowercase_fallback() {
        let dict = IdfDictionary::from_entries([("nba", 2.0), ("NBA", 4.0)], None);
        let text = CharSequence::new("Nba NBA");
        let strict = Matcher::new(&dict, CaseMode::Sensitive).unwrap();
        assert_eq!(spans(&strict.find_matches(&text)), vec![(4, 7, "NBA".into())]);
        let loose = Matcher::new(&dict, CaseMode::LowercaseFallback).unwrap();
        assert_eq!(
            spans(&loose.find_matches(&text)),
            vec![
                (0, 3, "NBA".into()),
                (0, 3, "nba".into()),
                (4, 7, "NBA".into())
            ]
        );
    }

    #[test]
    fn highest_idf_claims_shared_characters() {
        let text = CharSequence::new("NBA");
        let a = select_matches(&[m(0, 2, "NB", 3.0), m(0, 3, "NBA", 5.0)], &text).unwrap();
        assert!(a.slots().iter().all(|s| *s == Slot::Word("NBA".into())));
    }

    #[test]
    fn uncovered_characters() {
        let a = select_matches(&[], &CharSequence::new(" a")).unwrap();
        assert_eq!(a.slots(), &[Slot::Whitespace, Slot::Unk]);
    }

    #[test]
    fn out_of_bounds_match_rejected() {
        assert!(select_matches(&[m(1, 4, "x", 1.0)], &CharSequence::new("abc")).is_err());
        assert!(select_matches(&[m(1, 1, "x", 1.0)], &CharSequence::new("abc")).is_err());
    }

    #[test]
    fn multiword_match_claims_whitespace() {
        let text = CharSequence::new("Times Square");
        let a = select_matches(&[m(0, 12, "Times Square", 2.0)], &text).unwrap();
        assert_eq!(a.slots()[5], Slot::Word("Times Square".into()));
    }

    /// Per-character argmax under `priority`, O(T · #matches).
    fn naive_select(matches: &[Match], text: &CharSequence) -> Vec<Slot> {
        (0..text.len())
            .map(|i| {
                matches
                    .iter()
                    .filter(|m| m.start <= i && i < m.end)
                    .min_by(|a, b| priority(a, b))
                    .map(|m| Slot::Word(m.word.clone()))
                    .unwrap_or(if is_whitespace(text.chars()[i]) {
                        Slot::Whitespace
                    } else {
                        Slot::Unk
                    })
            })
            .collect()
    }

    #[test]
    fn union_find_sweep_equals_naive_argmax() {
        for seed in 0..200 {
            let mut rng = seeded_rng(9000 + seed);
            let text: String = (0..rng.gen_range(1..80))
                .map(|_| ['x', 'y', ' '][rng.gen_range(0..3)])
                .collect();
            let text = CharSequence::new(&text);
            let matches: Vec<Match> = (0..rng.gen_range(0..30))
                .map(|k| {
                    let s = rng.gen_range(0..text.len());
                    let e = rng.gen_range(s + 1..=text.len().min(s + 6));
                    // coarse IDFs so ties exercise the secondary keys
                    let idf = f64::from(rng.gen_range(0..3u8));
                    m(s, e, &format!("w{}", k % 4), idf)
                })
                .collect();
            let fast = select_matches(&matches, &text).unwrap();
            assert_eq!(fast.slots(), naive_select(&matches, &text).as_slice(), "seed {seed}");
        }
    }
}
