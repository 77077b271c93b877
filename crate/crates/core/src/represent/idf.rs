//! Inverse document frequency dictionary.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::convert::simple_tokenize;
use crate::error::{Error, Result};
use crate::text::CharSequence;

pub const DEFAULT_MIN_DF: usize = 2;

/// Smoothed IDF: `ln((1 + N) / (1 + df)) + 1`.
pub fn smoothed_idf(doc_count: usize, df: usize) -> f64 {
    ((1.0 + doc_count as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Document-frequency counts. Merging is associative and commutative, so
/// corpora can be counted in shards.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DfCounter {
    docs: usize,
    df: HashMap<String, usize>,
}

impl DfCounter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counts each distinct token of one document once.
    pub fn add_document(&mut self, text: &str) {
        self.docs += 1;
        let mut tokens: Vec<String> = simple_tokenize(&CharSequence::new(text))
            .into_iter()
            .map(|t| t.text)
            .collect();
        tokens.sort_unstable();
        tokens.dedup();
        for t in tokens {
            *self.df.entry(t).or_insert(0) += 1;
        }
    }

    pub fn merge(mut self, other: DfCounter) -> DfCounter {
        self.docs += other.docs;
        for (w, c) in other.df {
            *self.df.entry(w).or_insert(0) += c;
        }
        self
    }

    pub fn doc_count(&self) -> usize {
        self.docs
    }

    pub fn df(&self, word: &str) -> usize {
        self.df.get(word).copied().unwrap_or(0)
    }

    /// Keeps words with `df >= min_df` accepted by `keep`.
    pub fn finish(self, min_df: usize, keep: impl Fn(&str) -> bool) -> Result<IdfDictionary> {
        if self.docs == 0 {
            return Err(Error::EmptyCorpus);
        }
        let n = self.docs;
        let entries = self
            .df
            .into_iter()
            .filter(|(w, c)| *c >= min_df.max(1) && keep(w))
            .map(|(w, c)| (w, smoothed_idf(n, c)));
        Ok(IdfDictionary::from_entries(entries, Some(n)))
    }
}

/// Word → IDF store backing string-matching alignment.
#[derive(Clone, Debug, PartialEq)]
pub struct IdfDictionary {
    entries: BTreeMap<Arc<str>, f64>,
    doc_count: Option<usize>,
}

impl IdfDictionary {
    pub fn from_entries(
        entries: impl IntoIterator<Item = (impl Into<Arc<str>>, f64)>,
        doc_count: Option<usize>,
    ) -> Self {
        Self {
            entries: entries
                .into_iter()
                .map(|(w, idf)| (w.into(), idf))
                .filter(|(w, _): &(Arc<str>, f64)| !w.is_empty())
                .collect(),
            doc_count,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_count(&self) -> Option<usize> {
        self.doc_count
    }

    pub fn idf(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }

    /// Entries in lexicographic order of the word.
    pub fn iter(&self) -> impl Iterator<Item = (&Arc<str>, f64)> {
        self.entries.iter().map(|(w, &v)| (w, v))
    }

    pub fn retain(&mut self, keep: impl Fn(&str) -> bool) {
        self.entries.retain(|w, _| keep(w));
    }

    /// Reads `word<TAB>idf` lines.
    pub fn read_tsv(reader: impl BufRead, source_name: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let err = |detail: String| Error::Parse {
                source_name: source_name.to_string(),
                line: i + 1,
                detail,
            };
            let (word, idf) = line
                .rsplit_once('\t')
                .ok_or_else(|| err("expected word<TAB>idf".into()))?;
            let idf: f64 = idf.parse().map_err(|e| err(format!("bad idf {idf:?}: {e}")))?;
            if !idf.is_finite() || idf < 0.0 || word.is_empty() {
                return Err(err(format!("invalid entry {line:?}")));
            }
            entries.push((word.to_string(), idf));
        }
        Ok(Self::from_entries(entries, None))
    }

    pub fn write_tsv(&self, mut writer: impl Write) -> Result<()> {
        for (w, idf) in self.iter() {
            writeln!(writer, "{w}\t{idf}")?;
        }
        Ok(())
    }
}

/// Builds an IDF dictionary over `docs` (one document per item), dropping
/// words seen in fewer than `min_df` documents or rejected by `keep`.
pub fn build_idf<'a>(
    docs: impl IntoIterator<Item = &'a str>,
    min_df: usize,
    keep: impl Fn(&str) -> bool,
) -> Result<IdfDictionary> {
    let mut counter = DfCounter::new();
    for d in docs {
        counter.add_document(d);
    }
    counter.finish(min_df, keep)
}
