//! Pre-trained word vectors in word2vec text format.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::nn::{derive_seed, seeded_rng, Matrix};

/// Word → vector store with distinguished UNK and WHITESPACE vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Matrix,
    unk: Vec<f64>,
    whitespace: Vec<f64>,
}

impl EmbeddingTable {
    /// Builds a table from explicit vectors; UNK and WHITESPACE vectors are
    /// drawn uniformly from `[-0.1, 0.1]` with `seed`.
    pub fn new(dim: usize, entries: Vec<(String, Vec<f64>)>, seed: u64) -> Result<Self> {
        let mut rng = seeded_rng(seed);
        let unk = (0..dim).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let whitespace = (0..dim).map(|_| rng.gen_range(-0.1..0.1)).collect();
        Self::with_sentinels(dim, entries, unk, whitespace)
    }

    pub fn with_sentinels(
        dim: usize,
        entries: Vec<(String, Vec<f64>)>,
        unk: Vec<f64>,
        whitespace: Vec<f64>,
    ) -> Result<Self> {
        if unk.len() != dim || whitespace.len() != dim {
            return Err(Error::LengthMismatch {
                what: "sentinel vector",
                expected: dim,
                got: unk.len().min(whitespace.len()),
            });
        }
        let mut words = Vec::with_capacity(entries.len());
        let mut index = HashMap::with_capacity(entries.len());
        let mut data = Vec::with_capacity(entries.len() * dim);
        for (word, vector) in entries {
            if vector.len() != dim {
                return Err(Error::LengthMismatch {
                    what: "embedding vector",
                    expected: dim,
                    got: vector.len(),
                });
            }
            if index.insert(word.clone(), words.len()).is_some() {
                return Err(Error::Config(format!("duplicate embedding for {word:?}")));
            }
            words.push(word);
            data.extend(vector);
        }
        let vectors = Matrix::from_vec(words.len(), dim, data)?;
        Ok(Self {
            words,
            index,
            vectors,
            unk,
            whitespace,
        })
    }

    pub fn dim(&self) -> usize {
        self.unk.len()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.vectors.row(i))
    }

    /// One row per entry of [`words`](Self::words).
    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn unk(&self) -> &[f64] {
        &self.unk
    }

    pub fn whitespace(&self) -> &[f64] {
        &self.whitespace
    }

    /// Parses the word2vec text format: a `count dim` header followed by one
    /// `word v1 ... v_dim` line per word.
    pub fn read_word2vec(reader: impl BufRead, source_name: &str, seed: u64) -> Result<Self> {
        let parse_err = |line: usize, detail: String| Error::Parse {
            source_name: source_name.to_string(),
            line,
            detail,
        };
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| parse_err(1, "missing header".into()))??;
        let mut fields = header.split_whitespace();
        let (count, dim) = match (fields.next(), fields.next(), fields.next()) {
            (Some(c), Some(d), None) => (
                c.parse::<usize>()
                    .map_err(|e| parse_err(1, format!("bad vocabulary count: {e}")))?,
                d.parse::<usize>()
                    .map_err(|e| parse_err(1, format!("bad dimension: {e}")))?,
            ),
            _ => return Err(parse_err(1, "header must be \"count dimension\"".into())),
        };
        let mut entries = Vec::with_capacity(count);
        for (i, line) in lines.enumerate() {
            let line = line?;
            let line_no = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ').filter(|s| !s.is_empty());
            let word = parts
                .next()
                .ok_or_else(|| parse_err(line_no, "missing word".into()))?
                .to_string();
            let vector = parts
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| parse_err(line_no, format!("bad value {v:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if vector.len() != dim {
                return Err(parse_err(
                    line_no,
                    format!("expected {dim} values, found {}", vector.len()),
                ));
            }
            entries.push((word, vector));
        }
        if entries.len() != count {
            return Err(parse_err(
                entries.len() + 1,
                format!("header announces {count} words, file has {}", entries.len()),
            ));
        }
        Self::new(dim, entries, seed).map_err(|e| match e {
            Error::Config(detail) => parse_err(0, detail),
            other => other,
        })
    }

    pub fn write_word2vec(&self, mut writer: impl Write) -> Result<()> {
        writeln!(writer, "{} {}", self.len(), self.dim())?;
        for (i, word) in self.words.iter().enumerate() {
            write!(writer, "{word}")?;
            for v in self.vectors.row(i) {
                write!(writer, " {v}")?;
            }
            writeln!(writer)?;
        }
        Ok(())
    }
}

/// Deterministic stand-in for trained embeddings, used by tests and demos.
///
/// Each group of words shares a random center; every word is its center
/// plus independent noise, so words are distinct while groups stay
/// linearly separable. A word's vector depends only on `seed`, its group
/// index and its own spelling, never on the order words are listed.
#[derive(Clone, Copy, Debug)]
pub struct SyntheticEmbeddings {
    pub dim: usize,
    pub seed: u64,
    pub center_scale: f64,
    pub noise: f64,
}

impl SyntheticEmbeddings {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            seed,
            center_scale: 1.0,
            noise: 0.3,
        }
    }

    pub fn table<S: AsRef<str>>(&self, groups: &[Vec<S>]) -> Result<EmbeddingTable> {
        let mut entries = Vec::new();
        for (g, words) in groups.iter().enumerate() {
            let mut rng = seeded_rng(derive_seed(self.seed, &[1, g as u64]));
            let center: Vec<f64> = (0..self.dim)
                .map(|_| rng.gen_range(-self.center_scale..=self.center_scale))
                .collect();
            for word in words {
                let word = word.as_ref();
                let mut rng = seeded_rng(derive_seed(self.seed, &[2, g as u64, fnv1a(word)]));
                let v = center
                    .iter()
                    .map(|c| c + rng.gen_range(-self.noise..=self.noise))
                    .collect();
                entries.push((word.to_string(), v));
            }
        }
        EmbeddingTable::new(self.dim, entries, derive_seed(self.seed, &[3]))
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_word2vec_text() {
        let text = "2 3\nNBA 0.1 0.2 0.3\nFinals -1 0 1e-2\n";
        let t = EmbeddingTable::read_word2vec(text.as_bytes(), "e.txt", 0).unwrap();
        assert_eq!(t.dim(), 3);
        assert_eq!(t.get("Finals").unwrap(), &[-1.0, 0.0, 0.01]);
        assert!(t.get("nba").is_none());
        assert_ne!(t.unk(), t.whitespace());
        let mut out = Vec::new();
        t.write_word2vec(&mut out).unwrap();
        let again = EmbeddingTable::read_word2vec(out.as_slice(), "e.txt", 0).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn rejects_malformed_files() {
        let wrong_dim = "1 3\nNBA 0.1 0.2\n";
        assert!(matches!(
            EmbeddingTable::read_word2vec(wrong_dim.as_bytes(), "e", 0),
            Err(Error::Parse { line: 2, .. })
        ));
        let wrong_count = "2 1\nNBA 0.1\n";
        assert!(EmbeddingTable::read_word2vec(wrong_count.as_bytes(), "e", 0).is_err());
        let bad_value = "1 1\nNBA x\n";
        assert!(EmbeddingTable::read_word2vec(bad_value.as_bytes(), "e", 0).is_err());
        let dup = "2 1\na 1\na 2\n";
        assert!(EmbeddingTable::read_word2vec(dup.as_bytes(), "e", 0).is_err());
    }

    #[test]
    fn synthetic_vectors_are_order_independent_and_distinct() {
        let gen = SyntheticEmbeddings::new(8, 3);
        let a = gen.table(&[vec!["x", "y"], vec!["z"]]).unwrap();
        let b = gen.table(&[vec!["y", "x"], vec!["z"]]).unwrap();
        assert_eq!(a.get("x"), b.get("x"));
        assert_ne!(a.get("x"), a.get("y"));
        assert_ne!(a.get("x"), a.get("z"));
    }
}
