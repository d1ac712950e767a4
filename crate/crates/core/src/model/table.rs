//! Lookup-table model for hand-checkable fixtures.
//!
//! File format, one record per line:
//!
//! ```text
//! # comment
//! 4 9 9 9 | 0 1 0.5 ; 2 0 0 ; 0 0 3 ; 1 1 0
//! ```
//!
//! The token list (the exact sequence fingerprint) comes before `|`; after it,
//! one row of `vocab_size` logits per position, rows separated by `;`. Numbers
//! are plain decimal and round-trip exactly.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{LogitsBatch, MaskedModel, SequenceLogits};
use crate::error::{invalid, Error, Result};
use crate::sequence::{SequenceState, TokenId};

#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    pub tokens: Vec<TokenId>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct TableModel {
    vocab_size: usize,
    entries: Vec<TableEntry>,
    index: HashMap<Vec<TokenId>, usize>,
}

impl TableModel {
    pub fn from_entries(entries: Vec<TableEntry>) -> Result<Self> {
        let vocab_size = entries
            .first()
            .and_then(|e| e.rows.first())
            .map(Vec::len)
            .ok_or_else(|| invalid("table fixture has no entries"))?;
        if vocab_size < 2 {
            return Err(invalid("vocab_size must be at least 2"));
        }
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if e.rows.len() != e.tokens.len() {
                return Err(invalid(format!(
                    "entry {i}: {} rows for {} positions",
                    e.rows.len(),
                    e.tokens.len()
                )));
            }
            if e.rows.iter().any(|r| r.len() != vocab_size) {
                return Err(invalid(format!("entry {i}: row width differs from {vocab_size}")));
            }
            if e.rows.iter().flatten().any(|x| !x.is_finite()) {
                return Err(invalid(format!("entry {i}: non-finite logit")));
            }
            if index.insert(e.tokens.clone(), i).is_some() {
                return Err(invalid(format!("entry {i}: duplicate token list")));
            }
        }
        Ok(Self {
            vocab_size,
            entries,
            index,
        })
    }

    pub fn entries(&self) -> &[TableEntry] {
        &self.entries
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            entries.push(parse_record(line).map_err(|msg| Error::Parse { line: n + 1, msg })?);
        }
        Self::from_entries(entries)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let toks: Vec<String> = e.tokens.iter().map(u32::to_string).collect();
            let rows: Vec<String> = e
                .rows
                .iter()
                .map(|r| r.iter().map(f64::to_string).collect::<Vec<_>>().join(" "))
                .collect();
            let _ = writeln!(out, "{} | {}", toks.join(" "), rows.join(" ; "));
        }
        out
    }
}

fn parse_record(line: &str) -> std::result::Result<TableEntry, String> {
    let (toks, rows) = line.split_once('|').ok_or("missing '|' separator")?;
    let tokens = toks
        .split_whitespace()
        .map(|t| t.parse::<TokenId>().map_err(|e| format!("token {t:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let rows = rows
        .split(';')
        .map(|r| {
            r.split_whitespace()
                .map(|x| x.parse::<f64>().map_err(|e| format!("logit {x:?}: {e}")))
                .collect::<std::result::Result<Vec<_>, _>>()
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(TableEntry { tokens, rows })
}

impl MaskedModel for TableModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn forward(&self, batch: &[SequenceState]) -> Result<LogitsBatch> {
        if batch.is_empty() {
            return Err(invalid("empty batch"));
        }
        batch
            .iter()
            .map(|s| {
                let i = *self
                    .index
                    .get(s.tokens())
                    .ok_or_else(|| Error::FixtureMiss(s.tokens().to_vec()))?;
                SequenceLogits::from_rows(&self.entries[i].rows)
            })
            .collect()
    }
}
