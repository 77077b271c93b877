use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Features, NeuralCharCrf};
use crate::document::AnnotatedDocument;
use crate::error::{Error, Result};
use crate::eval::score;
use crate::nn::{clip_grad_norm, derive_seed, seeded_rng, Matrix, Module, OptimizerState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean NLL per document while training (dropout active).
    pub running_loss: f64,
    /// Mean NLL per training document after the epoch, dropout off.
    pub train_loss: f64,
    pub dev_f1: Option<f64>,
    /// Learning rate used during the epoch.
    pub lr: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    /// Mean NLL per training document before any update.
    pub initial_loss: f64,
    pub epochs: Vec<EpochLog>,
    /// Epoch whose parameters were kept, when chosen on dev F1.
    pub best_epoch: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainControl {
    Continue,
    Stop,
}

struct Prepared {
    feats: Features,
    labels: Vec<usize>,
}

impl NeuralCharCrf {
    fn prepare(&self, docs: &[AnnotatedDocument]) -> Result<Vec<Prepared>> {
        docs.iter()
            .enumerate()
            .map(|(i, d)| {
                if d.is_empty() {
                    return Err(Error::Config(format!("training document {} is empty", i + 1)));
                }
                Ok(Prepared {
                    feats: self.featurize(d.text())?,
                    labels: self.gold_labels(d)?,
                })
            })
            .collect()
    }

    fn mean_loss(&mut self, data: &[Prepared]) -> Result<f64> {
        let mut total = 0.0;
        for p in data {
            total += self.loss(&p.feats, &p.labels, None, false)?;
        }
        Ok(total / data.len() as f64)
    }

    fn dev_f1(&self, dev: &[AnnotatedDocument], feats: &[Features]) -> Result<f64> {
        let preds = dev
            .iter()
            .zip(feats)
            .map(|(d, f)| AnnotatedDocument::new(d.text().clone(), self.predict_features(f)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(score(dev, &preds)?.overall.f1)
    }

    /// Per-document training with seeded shuffling, dropout, gradient
    /// clipping and learning-rate annealing. With a dev set the parameters
    /// of the best dev-F1 epoch are restored at the end; otherwise the
    /// final epoch is kept and annealing follows the training loss.
    pub fn train(
        &mut self,
        train: &[AnnotatedDocument],
        dev: &[AnnotatedDocument],
        mut on_epoch: impl FnMut(&EpochLog, &NeuralCharCrf) -> TrainControl,
    ) -> Result<TrainLog> {
        let config = self.config.clone();
        let mut train_docs = train.to_vec();
        let mut dev_docs = dev.to_vec();
        if config.train_on_dev {
            train_docs.append(&mut dev_docs);
        }
        if train_docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let data = self.prepare(&train_docs)?;
        let dev_feats = dev_docs
            .iter()
            .map(|d| self.featurize(d.text()))
            .collect::<Result<Vec<_>>>()?;

        let mut log = TrainLog {
            initial_loss: self.mean_loss(&data)?,
            ..TrainLog::default()
        };
        let mut state = OptimizerState::new(config.optimizer.build());
        let mut lr = config.lr;
        let mut best = f64::NEG_INFINITY;
        let mut best_params: Option<Vec<Matrix>> = None;
        let mut bad_epochs = 0;
        let mut order: Vec<usize> = (0..data.len()).collect();

        for epoch in 0..config.epochs {
            order.sort_unstable();
            order.shuffle(&mut seeded_rng(derive_seed(config.seed, &[1, epoch as u64])));
            let mut running = 0.0;
            for (step, &i) in order.iter().enumerate() {
                let fail = |detail: String| Error::Training { epoch, step, detail };
                let mut rng = seeded_rng(derive_seed(config.seed, &[2, epoch as u64, step as u64]));
                let p = &data[i];
                let loss = self
                    .loss(&p.feats, &p.labels, Some(&mut rng), true)
                    .map_err(|e| fail(e.to_string()))?;
                if !loss.is_finite() {
                    return Err(fail(format!("loss became {loss} on document {}", i + 1)));
                }
                running += loss;
                let mut params = self.parameters_mut();
                clip_grad_norm(&mut params, config.clip);
                state.step(&mut params, lr).map_err(|e| fail(e.to_string()))?;
            }
            let train_loss = self.mean_loss(&data)?;
            let dev_f1 = if dev_docs.is_empty() {
                None
            } else {
                Some(self.dev_f1(&dev_docs, &dev_feats)?)
            };
            let entry = EpochLog {
                epoch,
                running_loss: running / data.len() as f64,
                train_loss,
                dev_f1,
                lr,
            };
            let metric = dev_f1.unwrap_or(-train_loss);
            if metric > best {
                best = metric;
                bad_epochs = 0;
                if dev_f1.is_some() {
                    best_params = Some(self.parameters().iter().map(|p| p.value.clone()).collect());
                    log.best_epoch = Some(epoch);
                }
            } else {
                bad_epochs += 1;
                if bad_epochs >= config.patience {
                    lr *= config.anneal;
                    bad_epochs = 0;
                }
            }
            log.epochs.push(entry);
            if on_epoch(log.epochs.last().expect("just pushed"), self) == TrainControl::Stop {
                break;
            }
        }
        if let Some(values) = best_params {
            for (p, v) in self.parameters_mut().into_iter().zip(values) {
                p.value = v;
            }
        }
        Ok(log)
    }
}
