//! Exact-match entity precision, recall and F1.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::document::AnnotatedDocument;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub true_positives: usize,
    pub predicted_count: usize,
    pub gold_count: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Counts {
    pub fn new(tp: usize, predicted: usize, gold: usize) -> Self {
        let (precision, recall, f1) = if predicted == 0 && gold == 0 {
            (1.0, 1.0, 1.0)
        } else {
            let p = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
            let r = if gold == 0 { 0.0 } else { tp as f64 / gold as f64 };
            let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            (p, r, f)
        };
        Self {
            true_positives: tp,
            predicted_count: predicted,
            gold_count: gold,
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_type: BTreeMap<String, Counts>,
    /// Micro-averaged over all types.
    pub overall: Counts,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.per_type.keys().map(String::len).max().unwrap_or(0).max(7);
        writeln!(
            f,
            "{:<width$}  {:>6}  {:>6}  {:>6}  {:>9}  {:>6}  {:>6}",
            "type", "tp", "pred", "gold", "precision", "recall", "f1"
        )?;
        let row = |f: &mut fmt::Formatter<'_>, name: &str, c: &Counts| {
            writeln!(
                f,
                "{name:<width$}  {:>6}  {:>6}  {:>6}  {:>9.4}  {:>6.4}  {:>6.4}",
                c.true_positives, c.predicted_count, c.gold_count, c.precision, c.recall, c.f1
            )
        };
        for (name, c) in &self.per_type {
            row(f, name, c)?;
        }
        row(f, "overall", &self.overall)
    }
}

/// Scores index-aligned prediction documents against gold documents.
pub fn score(gold: &[AnnotatedDocument], pred: &[AnnotatedDocument]) -> Result<EvalReport> {
    if gold.len() != pred.len() {
        return Err(Error::DocumentMismatch(format!(
            "{} gold documents but {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    let mut raw: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.text() != p.text() {
            return Err(Error::DocumentMismatch(format!(
                "document {} text differs between gold and prediction",
                i + 1
            )));
        }
        let gold_set: HashSet<_> = g.entities().iter().collect();
        for e in g.entities() {
            raw.entry(e.etype.clone()).or_default().2 += 1;
        }
        for e in p.entities() {
            let c = raw.entry(e.etype.clone()).or_default();
            c.1 += 1;
            if gold_set.contains(e) {
                c.0 += 1;
            }
        }
    }
    let per_type: BTreeMap<String, Counts> = raw
        .into_iter()
        .map(|(k, (tp, p, g))| (k, Counts::new(tp, p, g)))
        .collect();
    let (tp, p, g) = per_type.values().fold((0, 0, 0), |acc, c| {
        (acc.0 + c.true_positives, acc.1 + c.predicted_count, acc.2 + c.gold_count)
    });
    Ok(EvalReport {
        per_type,
        overall: Counts::new(tp, p, g),
    })
}
