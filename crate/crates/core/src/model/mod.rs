//! The full tagger: character representations, a BiLSTM and a CRF.

mod config;
mod format;
mod train;

pub use config::{AlignmentMode, ModelConfig, OptimizerKind};
pub use format::{MODEL_FORMAT, MODEL_VERSION};
pub use train::{EpochLog, TrainControl, TrainLog};

use crate::convert::simple_tokenize;
use crate::crf::{build_iobes_mask, nll_and_gradients, viterbi, CrfParams, TransitionMask};
use crate::document::{AnnotatedDocument, EntitySpan};
use crate::error::{Error, Result};
use crate::nn::{apply_mask, derive_seed, dropout_mask, seeded_rng, BiLstm, BiLstmRun, Matrix, Module, Parameter, Rng};
use crate::represent::{
    concat_representations, embed_alignment, select_matches, tokenize_align, Alignment, CharEncoder, CharLm, CharVocab,
    ContextProjection, Direction, EmbeddingTable, IdfDictionary, Matcher, RepresentationKind,
};
use crate::tagging::{labels_from_spans, spans_from_labels, TagSet};
use crate::text::CharSequence;

/// External inputs a model may need besides its own parameters.
#[derive(Clone, Debug, Default)]
pub struct Resources {
    pub embeddings: Option<EmbeddingTable>,
    pub dictionary: Option<IdfDictionary>,
    pub forward_lm: Option<CharLm>,
    pub backward_lm: Option<CharLm>,
}

/// Frozen per-document inputs, computed once and reused every epoch.
#[derive(Clone, Debug)]
pub struct Features {
    pub chars: Vec<char>,
    /// `T × d_w` aligned word vectors.
    pub words: Option<Matrix>,
    /// `T × 2h_lm` joined forward and backward LM states.
    pub lm_states: Option<Matrix>,
}

impl Features {
    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }
}

/// Activations of one forward pass, kept for the backward pass.
pub struct ForwardCache {
    f_mask: Option<Vec<f64>>,
    run: BiLstmRun,
    z: Matrix,
    z_mask: Option<Vec<f64>>,
    pub emissions: Matrix,
}

pub struct NeuralCharCrf {
    config: ModelConfig,
    tags: TagSet,
    mask: TransitionMask,
    embeddings: Option<EmbeddingTable>,
    dictionary: Option<IdfDictionary>,
    matcher: Option<Matcher>,
    lms: Option<(CharLm, CharLm)>,
    pub projection: Option<ContextProjection>,
    pub char_encoder: Option<CharEncoder>,
    pub bilstm: BiLstm,
    pub crf: CrfParams,
}

impl NeuralCharCrf {
    /// Fresh model. `char_vocab` feeds the character encoder and is usually
    /// built from the training texts.
    pub fn new(config: ModelConfig, resources: Resources, char_vocab: CharVocab) -> Result<Self> {
        config.validate()?;
        let tags = TagSet::new(config.types.clone())?;
        let mut rng = seeded_rng(derive_seed(config.seed, &[0xC0DE]));
        let Resources {
            embeddings,
            dictionary,
            forward_lm,
            backward_lm,
        } = resources;
        let (embeddings, dictionary) = match config.alignment {
            AlignmentMode::None => (None, None),
            AlignmentMode::Tokenize => (Some(require(embeddings, "word embeddings")?), None),
            AlignmentMode::Match => (
                Some(require(embeddings, "word embeddings")?),
                Some(require(dictionary, "IDF dictionary")?),
            ),
        };
        if let Some(e) = &embeddings {
            if e.dim() != config.word_dim {
                return Err(Error::Config(format!(
                    "word_dim is {} but the embeddings have dimension {}",
                    config.word_dim,
                    e.dim()
                )));
            }
        }
        let (lms, projection) = if config.contextual {
            let f = require(forward_lm, "forward language model")?;
            let b = require(backward_lm, "backward language model")?;
            check_lms(&f, &b)?;
            let proj = ContextProjection::new(f.hidden(), config.proj_dim, &mut rng)?;
            (Some((f, b)), Some(proj))
        } else {
            (None, None)
        };
        let char_encoder = config
            .char_encoding
            .then(|| CharEncoder::new("chars", char_vocab, config.char_dim, config.type_dim, &mut rng));
        let input = embeddings.as_ref().map_or(0, EmbeddingTable::dim)
            + projection.as_ref().map_or(0, ContextProjection::output_dim)
            + char_encoder.as_ref().map_or(0, CharEncoder::output_dim);
        let bilstm = BiLstm::new("bilstm", input, config.lstm_hidden, &mut rng);
        let crf = CrfParams::new(bilstm.output_dim(), tags.label_count(), &mut rng);
        Self::assemble(config, tags, embeddings, dictionary, lms, projection, char_encoder, bilstm, crf)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        config: ModelConfig,
        tags: TagSet,
        embeddings: Option<EmbeddingTable>,
        dictionary: Option<IdfDictionary>,
        lms: Option<(CharLm, CharLm)>,
        projection: Option<ContextProjection>,
        char_encoder: Option<CharEncoder>,
        bilstm: BiLstm,
        crf: CrfParams,
    ) -> Result<Self> {
        let matcher = match &dictionary {
            Some(d) => Some(Matcher::new(d, config.case_mode)?),
            None => None,
        };
        let mask = build_iobes_mask(&tags);
        let model = Self {
            config,
            tags,
            mask,
            embeddings,
            dictionary,
            matcher,
            lms,
            projection,
            char_encoder,
            bilstm,
            crf,
        };
        let widths: usize = model.modules().iter().map(|m| m.1).sum();
        if widths != model.bilstm.input() {
            return Err(Error::Config(format!(
                "representation widths sum to {widths} but the BiLSTM expects {}",
                model.bilstm.input()
            )));
        }
        if model.bilstm.output_dim() != model.crf.emission.input_dim()
            || model.crf.label_count() != model.tags.label_count()
        {
            return Err(Error::Config("BiLSTM output does not match the CRF".into()));
        }
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn tags(&self) -> &TagSet {
        &self.tags
    }

    pub fn embeddings(&self) -> Option<&EmbeddingTable> {
        self.embeddings.as_ref()
    }

    pub fn dictionary(&self) -> Option<&IdfDictionary> {
        self.dictionary.as_ref()
    }

    /// Enabled representation modules and their widths, in concatenation
    /// order.
    pub fn modules(&self) -> Vec<(RepresentationKind, usize)> {
        let mut out = Vec::new();
        if let Some(e) = &self.embeddings {
            out.push((RepresentationKind::WordEmbedding, e.dim()));
        }
        if let Some(p) = &self.projection {
            out.push((RepresentationKind::Contextual, p.output_dim()));
        }
        if let Some(c) = &self.char_encoder {
            out.push((RepresentationKind::CharEncoding, c.output_dim()));
        }
        out
    }

    /// Character-to-word alignment under the configured mode.
    pub fn align(&self, text: &CharSequence) -> Result<Option<Alignment>> {
        match self.config.alignment {
            AlignmentMode::None => Ok(None),
            AlignmentMode::Tokenize => {
                let table = self.embeddings.as_ref().expect("tokenize mode has embeddings");
                let tokens: Vec<(usize, usize)> =
                    simple_tokenize(text).iter().map(|t| (t.start, t.end)).collect();
                tokenize_align(text, &tokens, table).map(Some)
            }
            AlignmentMode::Match => {
                let matcher = self.matcher.as_ref().expect("match mode has a matcher");
                select_matches(&matcher.find_matches(text), text).map(Some)
            }
        }
    }

    pub fn featurize(&self, text: &CharSequence) -> Result<Features> {
        let words = match (self.align(text)?, &self.embeddings) {
            (Some(a), Some(table)) => Some(embed_alignment(&a, table)),
            _ => None,
        };
        let lm_states = match &self.lms {
            Some((f, b)) => {
                let h = f.states(text.chars())?;
                let h_r = b.states(text.chars())?;
                Some(Matrix::hconcat(&[&h, &h_r])?)
            }
            None => None,
        };
        Ok(Features {
            chars: text.chars().to_vec(),
            words,
            lm_states,
        })
    }

    /// Emission scores for one document. With `rng` set, dropout is active.
    pub fn forward(&self, feats: &Features, rng: Option<&mut Rng>) -> Result<ForwardCache> {
        if feats.is_empty() {
            return Err(Error::EmptySequence("model input"));
        }
        let mut parts: Vec<(RepresentationKind, Matrix)> = Vec::with_capacity(3);
        if let Some(w) = &feats.words {
            parts.push((RepresentationKind::WordEmbedding, w.clone()));
        }
        if let (Some(p), Some(s)) = (&self.projection, &feats.lm_states) {
            parts.push((RepresentationKind::Contextual, p.forward(s)?));
        }
        if let Some(c) = &self.char_encoder {
            parts.push((RepresentationKind::CharEncoding, c.forward(&feats.chars)));
        }
        let refs: Vec<(RepresentationKind, &Matrix)> = parts.iter().map(|(k, m)| (*k, m)).collect();
        let (mut f, _) = concat_representations(&refs)?;
        let (f_mask, z_mask);
        let run;
        let mut z;
        match rng {
            Some(rng) => {
                f_mask = active_mask(self.config.dropout_rep, f.data().len(), rng)?;
                if let Some(m) = &f_mask {
                    apply_mask(&mut f, m);
                }
                run = self.bilstm.forward(&f)?;
                z = run.output.clone();
                z_mask = active_mask(self.config.dropout, z.data().len(), rng)?;
                if let Some(m) = &z_mask {
                    apply_mask(&mut z, m);
                }
            }
            None => {
                f_mask = None;
                z_mask = None;
                run = self.bilstm.forward(&f)?;
                z = run.output.clone();
            }
        }
        let emissions = self.crf.emission_scores(&z)?;
        Ok(ForwardCache {
            f_mask,
            run,
            z,
            z_mask,
            emissions,
        })
    }

    /// Accumulates gradients of all trainable parameters given
    /// `d_emissions` and the CRF transition gradient.
    pub fn backward(&mut self, feats: &Features, cache: &ForwardCache, d_emissions: &Matrix, d_transitions: &Matrix) -> Result<()> {
        self.crf.transitions.grad.add_assign(d_transitions)?;
        let mut dz = self.crf.emission.backward(&cache.z, d_emissions)?;
        if let Some(m) = &cache.z_mask {
            apply_mask(&mut dz, m);
        }
        let mut df = self.bilstm.backward_pass(&cache.run, &dz)?;
        if let Some(m) = &cache.f_mask {
            apply_mask(&mut df, m);
        }
        let mut col = feats.words.as_ref().map_or(0, Matrix::cols);
        if let (Some(p), Some(s)) = (&mut self.projection, &feats.lm_states) {
            let w = p.output_dim();
            p.backward(s, &df.column_block(col, w))?;
            col += w;
        }
        if let Some(c) = &mut self.char_encoder {
            let w = c.output_dim();
            c.backward(&feats.chars, &df.column_block(col, w))?;
        }
        Ok(())
    }

    /// Gold label indices for `doc` under this model's tag set.
    pub fn gold_labels(&self, doc: &AnnotatedDocument) -> Result<Vec<usize>> {
        Ok(labels_from_spans(doc, &self.tags)?.as_slice().to_vec())
    }

    /// NLL of `labels`; gradients are accumulated when `backprop` is set.
    pub fn loss(&mut self, feats: &Features, labels: &[usize], rng: Option<&mut Rng>, backprop: bool) -> Result<f64> {
        let cache = self.forward(feats, rng)?;
        let out = nll_and_gradients(&cache.emissions, &self.crf.transitions.value, labels)?;
        if backprop {
            self.backward(feats, &cache, &out.d_emissions, &out.d_transitions)?;
        }
        Ok(out.loss)
    }

    pub fn predict_features(&self, feats: &Features) -> Result<Vec<EntitySpan>> {
        if feats.is_empty() {
            return Ok(Vec::new());
        }
        let cache = self.forward(feats, None)?;
        let (labels, _) = viterbi(&cache.emissions, &self.crf.transitions.value, Some(&self.mask))?;
        Ok(spans_from_labels(&labels, &self.tags))
    }

    /// Entity spans in `text`; empty text yields none.
    pub fn predict(&self, text: &CharSequence) -> Result<Vec<EntitySpan>> {
        if text.is_empty() {
            return Ok(Vec::new());
        }
        self.predict_features(&self.featurize(text)?)
    }

    pub fn predict_document(&self, text: &CharSequence) -> Result<AnnotatedDocument> {
        AnnotatedDocument::new(text.clone(), self.predict(text)?)
    }
}

impl Module for NeuralCharCrf {
    fn parameters(&self) -> Vec<&Parameter> {
        let mut ps = Vec::new();
        if let Some(p) = &self.projection {
            ps.extend(p.parameters());
        }
        if let Some(c) = &self.char_encoder {
            ps.extend(c.parameters());
        }
        ps.extend(self.bilstm.parameters());
        ps.extend(self.crf.parameters());
        ps
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut ps = Vec::new();
        if let Some(p) = &mut self.projection {
            ps.extend(p.parameters_mut());
        }
        if let Some(c) = &mut self.char_encoder {
            ps.extend(c.parameters_mut());
        }
        ps.extend(self.bilstm.parameters_mut());
        ps.extend(self.crf.parameters_mut());
        ps
    }
}

fn active_mask(p: f64, len: usize, rng: &mut Rng) -> Result<Option<Vec<f64>>> {
    if p == 0.0 {
        Ok(None)
    } else {
        dropout_mask(p, len, rng).map(Some)
    }
}

fn require<T>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("the configuration needs a {what}")))
}

fn check_lms(f: &CharLm, b: &CharLm) -> Result<()> {
    if f.direction != Direction::Forward || b.direction != Direction::Backward {
        return Err(Error::Config(
            "contextual representation needs one forward and one backward language model".into(),
        ));
    }
    if f.hidden() != b.hidden() {
        return Err(Error::Config(format!(
            "language model widths differ: {} vs {}",
            f.hidden(),
            b.hidden()
        )));
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests;
