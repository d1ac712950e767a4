use serde::{Deserialize, Serialize};

use super::{LogitsBatch, MaskedModel, SequenceLogits};
use crate::error::{invalid, Result};
use crate::sequence::SequenceState;

/// Weight of the context-dependent term relative to the per-position term.
const CONTEXT_MIX: f64 = 0.5;
/// Logit assigned to the mask id (in units of `sharpness`) when it lies inside
/// the vocabulary, so it is never the argmax.
const MASK_FLOOR: f64 = -4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthModelConfig {
    pub seed: u64,
    pub vocab_size: usize,
    pub sharpness: f64,
    /// Non-mask tokens at distance `1..=context_window` from a position
    /// influence its logits.
    pub context_window: usize,
}

impl Default for SynthModelConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            vocab_size: 32,
            sharpness: 4.0,
            context_window: 2,
        }
    }
}

/// Deterministic stand-in for a trained denoiser.
///
/// The logits at position `i` are a seeded hash of `i` plus a seeded hash of the
/// `(offset, token)` pairs of the revealed tokens within the context window,
/// scaled by `sharpness`. Masks carry no information. With a zero window the
/// logits depend on the position alone.
#[derive(Debug, Clone)]
pub struct SynthModel {
    config: SynthModelConfig,
}

impl SynthModel {
    pub fn new(config: SynthModelConfig) -> Result<Self> {
        if config.vocab_size < 2 {
            return Err(invalid("vocab_size must be at least 2"));
        }
        if !(config.sharpness.is_finite() && config.sharpness > 0.0) {
            return Err(invalid("sharpness must be a positive finite number"));
        }
        Ok(Self { config })
    }

    pub fn config(&self) -> &SynthModelConfig {
        &self.config
    }

    fn context_hash(&self, state: &SequenceState, pos: usize) -> u64 {
        let w = self.config.context_window as isize;
        let tokens = state.tokens();
        let mut h = mix(self.config.seed ^ 0xC0_47E7);
        for off in -w..=w {
            if off == 0 {
                continue;
            }
            let q = pos as isize + off;
            if q < 0 || q as usize >= tokens.len() {
                continue;
            }
            let tok = tokens[q as usize];
            if tok == state.mask_id() {
                continue;
            }
            h = mix(h ^ mix(((off as i64 as u64) << 32) ^ u64::from(tok)));
        }
        h
    }

    fn fill_row(&self, state: &SequenceState, pos: usize, row: &mut [f64]) {
        let s = self.config.sharpness;
        let base = mix(self.config.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ pos as u64);
        let ctx = self.context_hash(state, pos) ^ (pos as u64).rotate_left(17);
        for (v, out) in row.iter_mut().enumerate() {
            let b = unit(mix(base ^ (v as u64).wrapping_mul(0xA24B_AED4_963E_E407)));
            let c = unit(mix(ctx ^ (v as u64).wrapping_mul(0x9FB2_1C65_1E98_DF25)));
            *out = s * (b + CONTEXT_MIX * c);
        }
        let mask = state.mask_id() as usize;
        if mask < row.len() {
            row[mask] = s * MASK_FLOOR;
        }
    }

    fn forward_one(&self, state: &SequenceState) -> SequenceLogits {
        let v = self.config.vocab_size;
        let mut data = vec![0.0; state.len() * v];
        for (pos, row) in data.chunks_exact_mut(v).enumerate() {
            self.fill_row(state, pos, row);
        }
        SequenceLogits::new(v, data).expect("rows tile by construction")
    }
}

impl MaskedModel for SynthModel {
    fn vocab_size(&self) -> usize {
        self.config.vocab_size
    }

    fn forward(&self, batch: &[SequenceState]) -> Result<LogitsBatch> {
        if batch.is_empty() {
            return Err(invalid("empty batch"));
        }
        Ok(batch.iter().map(|s| self.forward_one(s)).collect())
    }
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Map to [-1, 1).
fn unit(x: u64) -> f64 {
    ((x >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
}
