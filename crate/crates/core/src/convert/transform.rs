//! Tokenizer transformations: token forms that differ from the raw text
//! they were cut from.

use std::collections::HashMap;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Tokenized form → raw forms it may stand for, in preference order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TokenTransformTable {
    forms: HashMap<String, Vec<String>>,
}

impl TokenTransformTable {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Penn Treebank style bracket tokens, ellipsis, dash and quote
    /// variants.
    pub fn builtin() -> Self {
        let mut t = Self::empty();
        for (tok, raws) in [
            ("-LRB-", &["("][..]),
            ("-RRB-", &[")"]),
            ("-LSB-", &["["]),
            ("-RSB-", &["]"]),
            ("-LCB-", &["{"]),
            ("-RCB-", &["}"]),
            ("...", &[". . .", ". .", "…"]),
            ("…", &["...", ". . ."]),
            ("``", &["\"", "“", "„", "«"]),
            ("''", &["\"", "”", "»"]),
            ("\"", &["“", "”", "„", "«", "»", "``", "''"]),
            ("`", &["'", "‘"]),
            ("'", &["’", "‘", "`"]),
            ("'s", &["’s"]),
            ("n't", &["n’t"]),
            ("--", &["—", "–", "-"]),
        ] {
            for raw in raws {
                t.insert(tok, raw).expect("builtin forms are non-empty");
            }
        }
        t
    }

    pub fn insert(&mut self, token: &str, raw: &str) -> Result<()> {
        if token.is_empty() || raw.is_empty() {
            return Err(Error::Config(format!(
                "empty transform entry {token:?} -> {raw:?}"
            )));
        }
        let alts = self.forms.entry(token.to_string()).or_default();
        if token != raw && !alts.iter().any(|a| a == raw) {
            alts.push(raw.to_string());
        }
        Ok(())
    }

    /// Raw forms other than the token itself.
    pub fn alternatives(&self, token: &str) -> &[String] {
        self.forms.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    /// Adds `token<TAB>raw` lines; repeated tokens accumulate alternatives.
    pub fn extend_from_tsv(&mut self, reader: impl BufRead, source_name: &str) -> Result<()> {
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let parse = |detail: String| Error::Parse {
                source_name: source_name.to_string(),
                line: i + 1,
                detail,
            };
            let (tok, raw) = line
                .split_once('\t')
                .ok_or_else(|| parse("expected tokenized<TAB>raw".into()))?;
            self.insert(tok, raw).map_err(|e| parse(e.to_string()))?;
        }
        Ok(())
    }
}
