//! The masked-model forward contract and the softmax helpers every decoder
//! shares.

mod synth;
mod table;

pub use synth::{SynthModel, SynthModelConfig};
pub use table::{TableEntry, TableModel};

use crate::error::{invalid, Result};
use crate::sequence::{Position, SequenceState, TokenId};

/// A masked language model: one call maps a batch of sequences to per-position
/// logits over the vocabulary.
///
/// Implementations must be pure (same batch, bit-identical logits) and treat
/// each sequence of a batch independently.
pub trait MaskedModel: Send + Sync {
    fn vocab_size(&self) -> usize;

    fn forward(&self, batch: &[SequenceState]) -> Result<LogitsBatch>;
}

impl<M: MaskedModel + ?Sized> MaskedModel for &M {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }

    fn forward(&self, batch: &[SequenceState]) -> Result<LogitsBatch> {
        (**self).forward(batch)
    }
}

impl<M: MaskedModel + ?Sized> MaskedModel for Box<M> {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }

    fn forward(&self, batch: &[SequenceState]) -> Result<LogitsBatch> {
        (**self).forward(batch)
    }
}

/// Logits for every position of one sequence, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceLogits {
    vocab_size: usize,
    data: Vec<f64>,
}

impl SequenceLogits {
    pub fn new(vocab_size: usize, data: Vec<f64>) -> Result<Self> {
        if vocab_size == 0 || data.len() % vocab_size != 0 {
            return Err(invalid(format!(
                "{} logits do not tile rows of width {vocab_size}",
                data.len()
            )));
        }
        Ok(Self { vocab_size, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let vocab_size = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != vocab_size) {
            return Err(invalid("logit rows have unequal widths"));
        }
        Self::new(vocab_size, rows.concat())
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn positions(&self) -> usize {
        self.data.len() / self.vocab_size
    }

    pub fn row(&self, pos: Position) -> &[f64] {
        &self.data[pos * self.vocab_size..(pos + 1) * self.vocab_size]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.vocab_size)
    }
}

/// Forward output, in input batch order.
pub type LogitsBatch = Vec<SequenceLogits>;

/// Numerically stable softmax (max subtracted before exponentiation).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn check_finite(logits: &[f64]) -> Result<()> {
    if logits.is_empty() {
        return Err(invalid("empty logit row"));
    }
    if let Some(i) = logits.iter().position(|l| !l.is_finite()) {
        return Err(invalid(format!("non-finite logit at vocabulary id {i}")));
    }
    Ok(())
}

/// Argmax token (ties to the lowest id) and its softmax probability.
pub fn predict_with_confidence(logits: &[f64]) -> Result<(TokenId, f64)> {
    check_finite(logits)?;
    let mut best = 0;
    for (i, &l) in logits.iter().enumerate().skip(1) {
        if l > logits[best] {
            best = i;
        }
    }
    let max = logits[best];
    let denom: f64 = logits.iter().map(|&l| (l - max).exp()).sum();
    Ok((best as TokenId, 1.0 / denom))
}

/// The `k` most probable tokens, descending by probability, ties to the lowest id.
pub fn top_k(logits: &[f64], k: usize) -> Result<Vec<(TokenId, f64)>> {
    check_finite(logits)?;
    let probs = softmax(logits);
    let mut ids: Vec<usize> = (0..logits.len()).collect();
    ids.sort_by(|&a, &b| logits[b].total_cmp(&logits[a]).then(a.cmp(&b)));
    Ok(ids.into_iter().take(k).map(|i| (i as TokenId, probs[i])).collect())
}
