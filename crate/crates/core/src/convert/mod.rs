//! Word-level annotations to character-level annotations.

mod align;
mod conll;
mod labels;
mod normalize;
mod tokenize;
mod transform;

pub use align::{align_tokens_to_raw, is_untokenizable};
pub use conll::{convert_corpus, label_types, read_conll};
pub use labels::{token_raw_offsets, word_label_runs, word_labels_to_char_labels, TokenizedSentence};
pub use normalize::{html_unescape_with_offsets, nfkc_with_offsets, normalize_with_offsets, IndexMapping};
pub use tokenize::{simple_tokenize, Token};
pub use transform::TokenTransformTable;
