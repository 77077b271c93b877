//! Character-level language models.
//!
//! A forward model reads left to right and predicts `x_t` from the state
//! after `x_{t-1}` (the zero state for `x_1`). A backward model is the same
//! machine run over the reversed text; its states are reversed back so that
//! row `t` always belongs to character `t`. States are taken after the
//! character has been consumed.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::chars::{CharEncoder, CharVocab};
use crate::error::{Error, FormatError, Result};
use crate::nn::{
    clip_grad_norm, derive_seed, log_sum_exp, seeded_rng, Linear, LstmCell, LstmRun, Matrix,
    Module, Optimizer, OptimizerState, Parameter,
};
use crate::serial::{TensorReader, TensorRecord};
use crate::text::CharSequence;

pub const LM_FORMAT: &str = "rawner-char-lm";
pub const LM_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            _ => Err(Error::Config(format!(
                "direction must be forward or backward, got {s:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LmDims {
    pub char_dim: usize,
    pub type_dim: usize,
    pub hidden: usize,
}

impl Default for LmDims {
    fn default() -> Self {
        Self {
            char_dim: 24,
            type_dim: 8,
            hidden: 64,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CharLm {
    pub direction: Direction,
    pub encoder: CharEncoder,
    pub lstm: LstmCell,
    pub output: Linear,
}

/// Everything one pass over a chunk needs for its backward pass.
struct LmPass {
    chars: Vec<char>,
    run: LstmRun,
    preds: Matrix,
    logits: Matrix,
    targets: Vec<usize>,
    nll: f64,
}

impl CharLm {
    /// Parameters depend only on `seed`, never on the direction.
    pub fn new(direction: Direction, vocab: CharVocab, dims: LmDims, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let v = vocab.size();
        let encoder = CharEncoder::new("lm.enc", vocab, dims.char_dim, dims.type_dim, &mut rng);
        let lstm = LstmCell::new("lm.lstm", encoder.output_dim(), dims.hidden, &mut rng);
        let output = Linear::new("lm.out", dims.hidden, v, true, &mut rng);
        Self {
            direction,
            encoder,
            lstm,
            output,
        }
    }

    /// A model whose logits are identically zero.
    pub fn uniform(direction: Direction, vocab: CharVocab, dims: LmDims) -> Self {
        let mut lm = Self::new(direction, vocab, dims, 0);
        lm.output.weight.value.fill(0.0);
        if let Some(b) = &mut lm.output.bias {
            b.value.fill(0.0);
        }
        lm
    }

    pub fn hidden(&self) -> usize {
        self.lstm.hidden()
    }

    pub fn vocab(&self) -> &CharVocab {
        &self.encoder.vocab
    }

    pub fn dims(&self) -> LmDims {
        LmDims {
            char_dim: self.encoder.char_dim(),
            type_dim: self.encoder.type_dim(),
            hidden: self.hidden(),
        }
    }

    fn reading_order(&self, chars: &[char]) -> Vec<char> {
        match self.direction {
            Direction::Forward => chars.to_vec(),
            Direction::Backward => chars.iter().rev().copied().collect(),
        }
    }

    fn pass(&self, chars: Vec<char>, init: Option<(&[f64], &[f64])>) -> Result<LmPass> {
        let inputs = self.encoder.forward(&chars);
        let run = self.lstm.run(&inputs, init)?;
        let h = self.hidden();
        let mut preds = Matrix::zeros(chars.len(), h);
        if let Some((h0, _)) = init {
            preds.row_mut(0).copy_from_slice(h0);
        }
        for t in 1..chars.len() {
            preds.row_mut(t).copy_from_slice(run.outputs.row(t - 1));
        }
        let logits = self.output.forward(&preds)?;
        let targets = self.encoder.vocab.encode(&chars);
        let nll = compensated_sum(
            targets
                .iter()
                .enumerate()
                .map(|(t, &y)| log_sum_exp(logits.row(t)) - logits.get(t, y)),
        );
        Ok(LmPass {
            chars,
            run,
            preds,
            logits,
            targets,
            nll,
        })
    }

    fn backward(&mut self, pass: &LmPass) -> Result<()> {
        let mut d_logits = pass.logits.clone();
        for (t, &y) in pass.targets.iter().enumerate() {
            let row = d_logits.row_mut(t);
            let lse = log_sum_exp(row);
            for v in row.iter_mut() {
                *v = (*v - lse).exp();
            }
            row[y] -= 1.0;
        }
        let d_preds = self.output.backward(&pass.preds, &d_logits)?;
        let n = pass.chars.len();
        let mut d_states = Matrix::zeros(n, self.hidden());
        for t in 1..n {
            d_states.row_mut(t - 1).copy_from_slice(d_preds.row(t));
        }
        let d_inputs = self.lstm.backward_run(&pass.run, &d_states)?;
        self.encoder.backward(&pass.chars, &d_inputs)
    }

    /// Total negative log-likelihood of `text` and the `T × h` states.
    pub fn step_loss(&self, text: &CharSequence) -> Result<(f64, Matrix)> {
        if text.is_empty() {
            return Err(Error::EmptySequence("language model input"));
        }
        let pass = self.pass(self.reading_order(text.chars()), None)?;
        let states = match self.direction {
            Direction::Forward => pass.run.outputs,
            Direction::Backward => pass.run.outputs.reversed_rows(),
        };
        Ok((pass.nll, states))
    }

    /// States only, skipping the output layer. Empty text gives `0 × h`.
    pub fn states(&self, chars: &[char]) -> Result<Matrix> {
        if chars.is_empty() {
            return Ok(Matrix::zeros(0, self.hidden()));
        }
        let inputs = self.encoder.forward(&self.reading_order(chars));
        let run = self.lstm.run(&inputs, None)?;
        Ok(match self.direction {
            Direction::Forward => run.outputs,
            Direction::Backward => run.outputs.reversed_rows(),
        })
    }

    /// Per-character perplexity over documents, `exp(total NLL / chars)`.
    pub fn perplexity(&self, docs: &[CharSequence]) -> Result<f64> {
        let mut nlls = Vec::new();
        let mut n = 0usize;
        for d in docs.iter().filter(|d| !d.is_empty()) {
            nlls.push(self.step_loss(d)?.0);
            n += d.len();
        }
        let nll = compensated_sum(nlls);
        if n == 0 {
            return Err(Error::EmptyCorpus);
        }
        Ok((nll / n as f64).exp())
    }

    pub fn to_record(&self) -> LmRecord {
        LmRecord {
            format: LM_FORMAT.into(),
            version: LM_VERSION,
            direction: self.direction,
            vocab: self.vocab().chars().iter().collect(),
            dims: self.dims(),
            tensors: self.parameters().into_iter().map(TensorRecord::from_parameter).collect(),
        }
    }

    pub fn from_record(rec: LmRecord) -> Result<Self, FormatError> {
        if rec.format != LM_FORMAT {
            return Err(FormatError::Other(format!(
                "not a character language model (format {:?})",
                rec.format
            )));
        }
        if rec.version != LM_VERSION {
            return Err(FormatError::Version {
                found: rec.version,
                expected: LM_VERSION,
            });
        }
        let vocab = CharVocab::new(rec.vocab.chars());
        let v = vocab.size();
        let d = rec.dims;
        if vocab.chars().len() != rec.vocab.chars().count() {
            return Err(FormatError::Other("duplicate characters in vocabulary".into()));
        }
        let input = d.char_dim + d.type_dim;
        let h = d.hidden;
        let mut r = TensorReader::new(rec.tensors);
        let char_emb = r.next("lm.enc.char_emb", Some((v, d.char_dim)))?;
        let type_emb = r.next("lm.enc.type_emb", Some((6, d.type_dim)))?;
        let w_ih = r.next("lm.lstm.w_ih", Some((4 * h, input)))?;
        let w_hh = r.next("lm.lstm.w_hh", Some((4 * h, h)))?;
        let bias = r.next("lm.lstm.bias", Some((1, 4 * h)))?;
        let out_w = r.next("lm.out.weight", Some((v, h)))?;
        let out_b = r.next("lm.out.bias", Some((1, v)))?;
        r.finish()?;
        let wrap = |e: Error| FormatError::WidthChain(e.to_string());
        Ok(Self {
            direction: rec.direction,
            encoder: CharEncoder::from_parts(vocab, char_emb, type_emb).map_err(wrap)?,
            lstm: LstmCell::from_parts(w_ih, w_hh, bias).map_err(wrap)?,
            output: Linear::from_parts(out_w, Some(out_b)).map_err(wrap)?,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_record())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: LmRecord = serde_json::from_str(s)
            .map_err(|e| FormatError::Truncated(format!("unreadable language model: {e}")))?;
        Ok(Self::from_record(rec)?)
    }
}

impl Module for CharLm {
    fn parameters(&self) -> Vec<&Parameter> {
        let mut ps = self.encoder.parameters();
        ps.extend(self.lstm.parameters());
        ps.extend(self.output.parameters());
        ps
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut ps = self.encoder.parameters_mut();
        ps.extend(self.lstm.parameters_mut());
        ps.extend(self.output.parameters_mut());
        ps
    }
}

/// Total NLL of `text` under `lm` and its hidden states.
pub fn lm_step_loss(lm: &CharLm, text: &CharSequence) -> Result<(f64, Matrix)> {
    lm.step_loss(text)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmRecord {
    pub format: String,
    pub version: u32,
    pub direction: Direction,
    pub vocab: String,
    pub dims: LmDims,
    pub tensors: Vec<TensorRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LmTrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Truncation length for backpropagation through time.
    pub bptt: usize,
    pub clip: f64,
    pub anneal: f64,
    pub patience: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    /// Stop once the epoch's training perplexity drops below this.
    pub target_perplexity: Option<f64>,
}

impl Default for LmTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            lr: 2e-3,
            bptt: 64,
            clip: 5.0,
            anneal: 0.1,
            patience: 3,
            seed: 0,
            optimizer: Optimizer::adam(),
            target_perplexity: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmEpochLog {
    pub epoch: usize,
    /// Mean per-character NLL accumulated while training the epoch.
    pub loss: f64,
    pub perplexity: f64,
    pub lr: f64,
}

/// Resumable training state.
#[derive(Clone, Debug)]
pub struct LmTrainer {
    pub lm: CharLm,
    pub config: LmTrainConfig,
    pub state: OptimizerState,
    pub epoch: usize,
    pub lr: f64,
    pub best_loss: f64,
    pub bad_epochs: usize,
    pub log: Vec<LmEpochLog>,
}

impl LmTrainer {
    pub fn new(lm: CharLm, config: LmTrainConfig) -> Self {
        Self {
            state: OptimizerState::new(config.optimizer),
            lr: config.lr,
            lm,
            config,
            epoch: 0,
            best_loss: f64::INFINITY,
            bad_epochs: 0,
            log: Vec::new(),
        }
    }

    fn chunk_step(
        &mut self,
        chunk: Vec<char>,
        init: Option<(Vec<f64>, Vec<f64>)>,
    ) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let pass = {
            let init = init.as_ref().map(|(h, c)| (h.as_slice(), c.as_slice()));
            self.lm.pass(chunk, init)?
        };
        if !pass.nll.is_finite() {
            return Err(Error::NonFiniteLoss(pass.nll));
        }
        self.lm.backward(&pass)?;
        let mut params = self.lm.parameters_mut();
        clip_grad_norm(&mut params, self.config.clip);
        self.state.step(&mut params, self.lr)?;
        Ok((pass.nll, pass.run.final_h, pass.run.final_c))
    }

    /// One pass over `docs` in a seeded order; state is carried across the
    /// truncation boundaries of a document but not across documents.
    pub fn run_epoch(&mut self, docs: &[CharSequence]) -> Result<LmEpochLog> {
        let mut order: Vec<usize> = (0..docs.len()).filter(|&i| !docs[i].is_empty()).collect();
        if order.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        order.shuffle(&mut seeded_rng(derive_seed(self.config.seed, &[self.epoch as u64])));
        let bptt = self.config.bptt.max(1);
        let mut nll = 0.0;
        let mut n = 0usize;
        for (step, &i) in order.iter().enumerate() {
            let chars = self.lm.reading_order(docs[i].chars());
            let mut state = None;
            for chunk in chars.chunks(bptt) {
                let (l, h, c) = self
                    .chunk_step(chunk.to_vec(), state.take())
                    .map_err(|e| Error::Training {
                        epoch: self.epoch,
                        step,
                        detail: e.to_string(),
                    })?;
                nll += l;
                n += chunk.len();
                state = Some((h, c));
            }
        }
        let loss = nll / n as f64;
        let entry = LmEpochLog {
            epoch: self.epoch,
            loss,
            perplexity: loss.exp(),
            lr: self.lr,
        };
        if loss < self.best_loss {
            self.best_loss = loss;
            self.bad_epochs = 0;
        } else {
            self.bad_epochs += 1;
            if self.bad_epochs >= self.config.patience {
                self.lr *= self.config.anneal;
                self.bad_epochs = 0;
            }
        }
        self.epoch += 1;
        self.log.push(entry.clone());
        Ok(entry)
    }

    /// Trains until `config.epochs` epochs have run in total, the target
    /// perplexity is reached or `on_epoch` returns false.
    pub fn train(
        &mut self,
        docs: &[CharSequence],
        mut on_epoch: impl FnMut(&LmEpochLog) -> bool,
    ) -> Result<()> {
        while self.epoch < self.config.epochs {
            let entry = self.run_epoch(docs)?;
            let go_on = on_epoch(&entry);
            if !go_on || self.config.target_perplexity.is_some_and(|p| entry.perplexity < p) {
                break;
            }
        }
        Ok(())
    }

    pub fn checkpoint(&self) -> LmCheckpoint {
        let params = self.lm.parameters();
        let names: Vec<&str> = params.iter().map(|p| p.name.as_str()).collect();
        let moments = |ms: &[Matrix]| {
            ms.iter()
                .zip(&names)
                .map(|(m, n)| TensorRecord::from_matrix(*n, m))
                .collect()
        };
        LmCheckpoint {
            lm: self.lm.to_record(),
            config: self.config.clone(),
            optimizer_step: self.state.step,
            first_moments: moments(&self.state.first),
            second_moments: moments(&self.state.second),
            epoch: self.epoch,
            lr: self.lr,
            best_loss: if self.best_loss.is_finite() {
                Some(self.best_loss)
            } else {
                None
            },
            bad_epochs: self.bad_epochs,
            log: self.log.clone(),
        }
    }

    pub fn from_checkpoint(ck: LmCheckpoint) -> Result<Self> {
        let lm = CharLm::from_record(ck.lm)?;
        let restore = |recs: Vec<TensorRecord>| -> Result<Vec<Matrix>> {
            Ok(recs
                .iter()
                .map(|r| r.to_matrix())
                .collect::<Result<Vec<_>, FormatError>>()?)
        };
        let mut state = OptimizerState::new(ck.config.optimizer);
        state.step = ck.optimizer_step;
        state.first = restore(ck.first_moments)?;
        state.second = restore(ck.second_moments)?;
        Ok(Self {
            lm,
            config: ck.config,
            state,
            epoch: ck.epoch,
            lr: ck.lr,
            best_loss: ck.best_loss.unwrap_or(f64::INFINITY),
            bad_epochs: ck.bad_epochs,
            log: ck.log,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmCheckpoint {
    pub lm: LmRecord,
    pub config: LmTrainConfig,
    pub optimizer_step: u64,
    pub first_moments: Vec<TensorRecord>,
    pub second_moments: Vec<TensorRecord>,
    pub epoch: usize,
    pub lr: f64,
    pub best_loss: Option<f64>,
    pub bad_epochs: usize,
    pub log: Vec<LmEpochLog>,
}

/// Neumaier summation.
fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        c += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + c
}
