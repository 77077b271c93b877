use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Optimizer;
use crate::represent::CaseMode;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignmentMode {
    /// Word embeddings through `simple_tokenize` tokens.
    Tokenize,
    /// Word embeddings through IDF-prioritized dictionary matches.
    #[default]
    Match,
    /// No word-embedding module.
    None,
}

impl std::str::FromStr for AlignmentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tokenize" => Ok(AlignmentMode::Tokenize),
            "match" => Ok(AlignmentMode::Match),
            "none" => Ok(AlignmentMode::None),
            _ => Err(Error::Config(format!(
                "alignment must be tokenize, match or none, got {s:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

impl OptimizerKind {
    pub fn build(self) -> Optimizer {
        match self {
            OptimizerKind::Sgd => Optimizer::Sgd,
            OptimizerKind::Adam => Optimizer::adam(),
        }
    }
}

/// Every knob of a run. Serialized as a flat TOML table; unknown keys are
/// rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Entity types; labels are O plus B/I/E/S per type.
    pub types: Vec<String>,
    pub alignment: AlignmentMode,
    pub case_mode: CaseMode,
    pub contextual: bool,
    pub char_encoding: bool,

    pub word_dim: usize,
    pub proj_dim: usize,
    pub lstm_hidden: usize,
    pub char_dim: usize,
    pub type_dim: usize,

    pub lm_hidden: usize,
    pub lm_char_dim: usize,
    pub lm_type_dim: usize,
    pub lm_epochs: usize,
    pub lm_lr: f64,
    pub lm_bptt: usize,

    /// Dropout on the BiLSTM output.
    pub dropout: f64,
    /// Dropout on the concatenated character representation.
    pub dropout_rep: f64,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub clip: f64,
    pub epochs: usize,
    pub anneal: f64,
    pub patience: usize,
    pub seed: u64,
    /// Train on train + dev, keeping the final epoch.
    pub train_on_dev: bool,
    pub min_df: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            types: vec!["PER".into(), "LOC".into(), "ORG".into(), "MISC".into()],
            alignment: AlignmentMode::Match,
            case_mode: CaseMode::Sensitive,
            contextual: true,
            char_encoding: true,
            word_dim: 50,
            proj_dim: 32,
            lstm_hidden: 64,
            char_dim: 24,
            type_dim: 8,
            lm_hidden: 64,
            lm_char_dim: 24,
            lm_type_dim: 8,
            lm_epochs: 10,
            lm_lr: 2e-3,
            lm_bptt: 64,
            dropout: 0.5,
            dropout_rep: 0.1,
            optimizer: OptimizerKind::Adam,
            lr: 1e-3,
            clip: 1.0,
            epochs: 30,
            anneal: 0.1,
            patience: 3,
            seed: 0,
            train_on_dev: false,
            min_df: 2,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alignment == AlignmentMode::None && !self.contextual && !self.char_encoding {
            return Err(Error::Config("at least one representation module must be enabled".into()));
        }
        for (name, p) in [("dropout", self.dropout), ("dropout_rep", self.dropout_rep)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {p}")));
            }
        }
        let positive = [
            ("lstm_hidden", self.lstm_hidden),
            ("word_dim", self.word_dim),
            ("lm_hidden", self.lm_hidden),
            ("lm_bptt", self.lm_bptt),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if self.char_encoding && self.char_dim + self.type_dim == 0 {
            return Err(Error::Config("character encoding needs char_dim + type_dim > 0".into()));
        }
        if self.contextual && (self.proj_dim == 0 || self.proj_dim >= 2 * self.lm_hidden) {
            return Err(Error::Config(format!(
                "proj_dim {} must be positive and below 2 x lm_hidden ({})",
                self.proj_dim, self.lm_hidden
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) || !(self.clip > 0.0) {
            return Err(Error::Config("lr and clip must be positive".into()));
        }
        if !(self.anneal > 0.0 && self.anneal <= 1.0) {
            return Err(Error::Config(format!("anneal must lie in (0, 1], got {}", self.anneal)));
        }
        crate::tagging::TagSet::new(self.types.clone())?;
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: ModelConfig = toml::from_str(s).map_err(|e| Error::Config(e.message().to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::ResourceNotFound(path.to_path_buf()));
        }
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies one `key=value` override, parsing the value as a TOML value
    /// and falling back to a bare string.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
        let key = key.trim();
        let value = value.trim();
        let mut table = toml::Table::try_from(&*self).map_err(|e| Error::Config(e.to_string()))?;
        if !table.contains_key(key) {
            return Err(Error::Config(format!("unknown config key {key:?}")));
        }
        let parsed: toml::Value = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        let parsed = match (&table[key], parsed) {
            (toml::Value::Array(_), toml::Value::String(s)) => toml::Value::Array(
                s.split(',')
                    .map(|t| toml::Value::String(t.trim().to_string()))
                    .filter(|v| v.as_str() != Some(""))
                    .collect(),
            ),
            (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
            (_, v) => v,
        };
        table.insert(key.to_string(), parsed);
        let updated: ModelConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("{key}: {}", e.message())))?;
        *self = updated;
        Ok(())
    }
}
