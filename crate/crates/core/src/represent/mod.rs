//! Character representations: word embeddings aligned to characters,
//! contextual language-model states and the character encoder.

pub mod align;
pub mod chars;
pub mod context;
pub mod embedding;
pub mod idf;
pub mod lm;
pub mod matching;

pub use align::{embed_alignment, tokenize_align, Alignment, Slot};
pub use chars::{CharCategory, CharEncoder, CharVocab};
pub use context::{contextual_rep, ContextProjection};
pub use embedding::{EmbeddingTable, SyntheticEmbeddings};
pub use idf::{build_idf, smoothed_idf, DfCounter, IdfDictionary, DEFAULT_MIN_DF};
pub use lm::{lm_step_loss, CharLm, Direction, LmDims, LmTrainConfig, LmTrainer};
pub use matching::{find_matches, select_matches, CaseMode, Match, Matcher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Representation modules in their fixed concatenation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepresentationKind {
    WordEmbedding,
    Contextual,
    CharEncoding,
}

/// Concatenates per-module outputs column-wise in canonical order and
/// returns the joined matrix with the `(kind, width)` list describing it.
pub fn concat_representations(
    parts: &[(RepresentationKind, &Matrix)],
) -> Result<(Matrix, Vec<(RepresentationKind, usize)>)> {
    if parts.is_empty() {
        return Err(Error::Config("no representation module enabled".into()));
    }
    if parts.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::Config(format!(
            "representation modules out of order: {:?}",
            parts.iter().map(|p| p.0).collect::<Vec<_>>()
        )));
    }
    let mats: Vec<&Matrix> = parts.iter().map(|p| p.1).collect();
    let joined = Matrix::hconcat(&mats)?;
    Ok((joined, parts.iter().map(|(k, m)| (*k, m.cols())).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_module_is_identity() {
        let m = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (j, widths) = concat_representations(&[(RepresentationKind::Contextual, &m)]).unwrap();
        assert_eq!(j, m);
        assert_eq!(widths, vec![(RepresentationKind::Contextual, 2)]);
    }

    #[test]
    fn widths_add_up() {
        use RepresentationKind::*;
        let (a, b, c) = (Matrix::zeros(3, 100), Matrix::zeros(3, 100), Matrix::zeros(3, 40));
        let (j, _) =
            concat_representations(&[(WordEmbedding, &a), (Contextual, &b), (CharEncoding, &c)])
                .unwrap();
        assert_eq!(j.cols(), 240);
        assert!(concat_representations(&[(Contextual, &b), (WordEmbedding, &a)]).is_err());
        assert!(concat_representations(&[(WordEmbedding, &a), (Contextual, &Matrix::zeros(2, 1))]).is_err());
    }
}
