//! Character vocabulary, character type categories and the two-level
//! character encoder (character vector ++ type vector).

use std::collections::{BTreeSet, HashMap};

use unicode_general_category::{get_general_category, GeneralCategory as G};

use crate::error::{Error, Result};
use crate::nn::{Matrix, Module, Parameter, Rng};
use crate::text::is_whitespace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CharCategory {
    Upper,
    Lower,
    Digit,
    Whitespace,
    Punctuation,
    Other,
}

impl CharCategory {
    pub const COUNT: usize = 6;

    pub fn of(c: char) -> Self {
        if is_whitespace(c) {
            return CharCategory::Whitespace;
        }
        match get_general_category(c) {
            G::UppercaseLetter | G::TitlecaseLetter => CharCategory::Upper,
            G::LowercaseLetter => CharCategory::Lower,
            G::DecimalNumber | G::LetterNumber | G::OtherNumber => CharCategory::Digit,
            G::ConnectorPunctuation
            | G::DashPunctuation
            | G::OpenPunctuation
            | G::ClosePunctuation
            | G::InitialPunctuation
            | G::FinalPunctuation
            | G::OtherPunctuation => CharCategory::Punctuation,
            _ => CharCategory::Other,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Sorted character inventory; index 0 is reserved for unseen characters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharVocab {
    chars: Vec<char>,
    index: HashMap<char, usize>,
}

impl CharVocab {
    pub const UNSEEN: usize = 0;

    pub fn new(chars: impl IntoIterator<Item = char>) -> Self {
        let chars: Vec<char> = chars.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let index = chars.iter().enumerate().map(|(i, &c)| (c, i + 1)).collect();
        Self { chars, index }
    }

    /// Characters occurring at least `min_count` times in `texts`.
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>, min_count: usize) -> Self {
        let mut counts: HashMap<char, usize> = HashMap::new();
        for t in texts {
            for c in t.chars() {
                *counts.entry(c).or_insert(0) += 1;
            }
        }
        Self::new(
            counts
                .into_iter()
                .filter(|&(_, n)| n >= min_count.max(1))
                .map(|(c, _)| c),
        )
    }

    /// Number of indices, including the unseen slot.
    pub fn size(&self) -> usize {
        self.chars.len() + 1
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn index(&self, c: char) -> usize {
        self.index.get(&c).copied().unwrap_or(Self::UNSEEN)
    }

    pub fn encode(&self, chars: &[char]) -> Vec<usize> {
        chars.iter().map(|&c| self.index(c)).collect()
    }
}

/// Embeds each character as `[char_emb[index] ; type_emb[category]]`.
#[derive(Clone, Debug)]
pub struct CharEncoder {
    pub vocab: CharVocab,
    pub char_emb: Parameter,
    pub type_emb: Parameter,
}

impl CharEncoder {
    pub fn new(name: &str, vocab: CharVocab, char_dim: usize, type_dim: usize, rng: &mut Rng) -> Self {
        let char_emb = Parameter::new(
            format!("{name}.char_emb"),
            Matrix::uniform(vocab.size(), char_dim, 0.1, rng),
        );
        let type_emb = Parameter::new(
            format!("{name}.type_emb"),
            Matrix::uniform(CharCategory::COUNT, type_dim, 0.1, rng),
        );
        Self {
            vocab,
            char_emb,
            type_emb,
        }
    }

    pub fn from_parts(vocab: CharVocab, char_emb: Parameter, type_emb: Parameter) -> Result<Self> {
        if char_emb.value.rows() != vocab.size() {
            return Err(Error::LengthMismatch {
                what: "character embedding rows",
                expected: vocab.size(),
                got: char_emb.value.rows(),
            });
        }
        if type_emb.value.rows() != CharCategory::COUNT {
            return Err(Error::LengthMismatch {
                what: "type embedding rows",
                expected: CharCategory::COUNT,
                got: type_emb.value.rows(),
            });
        }
        Ok(Self {
            vocab,
            char_emb,
            type_emb,
        })
    }

    pub fn char_dim(&self) -> usize {
        self.char_emb.value.cols()
    }

    pub fn type_dim(&self) -> usize {
        self.type_emb.value.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.char_dim() + self.type_dim()
    }

    pub fn forward(&self, chars: &[char]) -> Matrix {
        let (dc, dt) = (self.char_dim(), self.type_dim());
        let mut out = Matrix::zeros(chars.len(), dc + dt);
        for (t, &c) in chars.iter().enumerate() {
            let row = out.row_mut(t);
            row[..dc].copy_from_slice(self.char_emb.value.row(self.vocab.index(c)));
            row[dc..].copy_from_slice(self.type_emb.value.row(CharCategory::of(c).index()));
        }
        out
    }

    /// Accumulates embedding gradients from `d_out` (`T × output_dim`).
    pub fn backward(&mut self, chars: &[char], d_out: &Matrix) -> Result<()> {
        if d_out.shape() != (chars.len(), self.output_dim()) {
            return Err(Error::Shape {
                op: "char encoder backward",
                left: d_out.shape(),
                right: (chars.len(), self.output_dim()),
            });
        }
        let dc = self.char_dim();
        for (t, &c) in chars.iter().enumerate() {
            let g = d_out.row(t);
            let ci = self.vocab.index(c);
            for (a, b) in self.char_emb.grad.row_mut(ci).iter_mut().zip(&g[..dc]) {
                *a += b;
            }
            let ti = CharCategory::of(c).index();
            for (a, b) in self.type_emb.grad.row_mut(ti).iter_mut().zip(&g[dc..]) {
                *a += b;
            }
        }
        Ok(())
    }
}

impl Module for CharEncoder {
    fn parameters(&self) -> Vec<&Parameter> {
        vec![&self.char_emb, &self.type_emb]
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.char_emb, &mut self.type_emb]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check, seeded_rng};
    use proptest::prelude::*;

    #[test]
    fn categories() {
        use CharCategory::*;
        let cases = [
            ('N', Upper),
            ('ǅ', Upper),
            ('b', Lower),
            ('7', Digit),
            ('٣', Digit),
            (' ', Whitespace),
            ('\u{3000}', Whitespace),
            ('\n', Whitespace),
            ('-', Punctuation),
            ('«', Punctuation),
            ('#', Punctuation),
            ('$', Other),
            ('😀', Other),
            ('中', Other),
        ];
        for (c, cat) in cases {
            assert_eq!(CharCategory::of(c), cat, "{c:?}");
        }
    }

    #[test]
    fn vocab_reserves_unseen_slot() {
        let v = CharVocab::from_texts(["abca", "c"], 2);
        assert_eq!(v.chars(), &['a', 'c']);
        assert_eq!(v.size(), 3);
        assert_eq!(v.encode(&['a', 'b', 'c']), vec![1, 0, 2]);
    }

    #[test]
    fn encoding_is_concatenation() {
        let mut rng = seeded_rng(0);
        let enc = CharEncoder::new("e", CharVocab::new("aB".chars()), 3, 2, &mut rng);
        let out = enc.forward(&['B', 'z']);
        assert_eq!(out.shape(), (2, 5));
        assert_eq!(&out.row(0)[..3], enc.char_emb.value.row(enc.vocab.index('B')));
        assert_eq!(&out.row(0)[3..], enc.type_emb.value.row(CharCategory::Upper.index()));
        assert_eq!(&out.row(1)[..3], enc.char_emb.value.row(CharVocab::UNSEEN));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let chars: Vec<char> = "aB a1!x".chars().collect();
        for seed in 0..20 {
            let mut rng = seeded_rng(seed);
            let mut enc = CharEncoder::new("e", CharVocab::new("aB1".chars()), 3, 2, &mut rng);
            let weights = Matrix::uniform(chars.len(), 5, 1.0, &mut rng);
            let report = grad_check(
                &mut enc,
                |e, backward| {
                    let out = e.forward(&chars);
                    let loss: f64 = out
                        .data()
                        .iter()
                        .zip(weights.data())
                        .map(|(a, w)| (a * w).sin())
                        .sum();
                    if backward {
                        let mut d = out.clone();
                        for ((g, a), w) in d.data_mut().iter_mut().zip(out.data()).zip(weights.data()) {
                            *g = (a * w).cos() * w;
                        }
                        e.backward(&chars, &d)?;
                    }
                    Ok(loss)
                },
                1e-5,
            )
            .unwrap();
            assert!(report.max_relative_error < 1e-6, "seed {seed}: {report:?}");
        }
    }

    proptest! {
        #[test]
        fn every_scalar_has_a_category(c in any::<char>()) {
            let cat = CharCategory::of(c);
            prop_assert!(cat.index() < CharCategory::COUNT);
        }
    }
}
