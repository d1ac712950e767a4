//! Sequence state, the mask convention and the semi-autoregressive block schedule.
//!
//! Positions are 0-indexed absolute offsets into the full token list (prompt
//! included). Block ranges print in the 1-indexed `[first..last]` form used
//! when talking about the generation region; that conversion lives only in
//! the `Display` impls here.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type TokenId = u32;
pub type Position = usize;

/// Ordered, disjoint, contiguous blocks covering the generation region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSchedule {
    blocks: Vec<Range<Position>>,
}

impl BlockSchedule {
    pub fn blocks(&self) -> &[Range<Position>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Range<Position>> {
        self.blocks.get(index)
    }

    /// Index of the block containing `pos`, if `pos` is in the generation region.
    pub fn block_of(&self, pos: Position) -> Option<usize> {
        let first = self.blocks.first()?.start;
        let last = self.blocks.last()?.end;
        if pos < first || pos >= last {
            return None;
        }
        let block_len = self.blocks[0].len();
        Some((pos - first) / block_len)
    }
}

impl fmt::Display for BlockSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "[{}..{}]", b.start + 1, b.end)?;
        }
        Ok(())
    }
}

/// Partition the generation region `prompt_len .. prompt_len + gen_len` into
/// blocks of `block_len`; the last block is truncated.
pub fn block_partition(prompt_len: usize, gen_len: usize, block_len: usize) -> Result<BlockSchedule> {
    if gen_len == 0 {
        return Err(invalid("gen_len must be at least 1"));
    }
    if block_len == 0 {
        return Err(invalid("block_len must be at least 1"));
    }
    let count = gen_len.div_ceil(block_len);
    let blocks = (0..count)
        .map(|j| {
            let start = prompt_len + j * block_len;
            let end = prompt_len + ((j + 1) * block_len).min(gen_len);
            start..end
        })
        .collect();
    Ok(BlockSchedule { blocks })
}

/// A prompt followed by a generation region, with masked positions marked by
/// `mask_id`. Cloning yields an independent snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SequenceState {
    tokens: Vec<TokenId>,
    prompt_len: usize,
    mask_id: TokenId,
    block_len: usize,
}

impl SequenceState {
    /// The initial state: `prompt` followed by `gen_len` masks.
    pub fn new(prompt: &[TokenId], gen_len: usize, mask_id: TokenId, block_len: usize) -> Result<Self> {
        if gen_len == 0 {
            return Err(invalid("gen_len must be at least 1"));
        }
        if block_len == 0 {
            return Err(invalid("block_len must be at least 1"));
        }
        if let Some(i) = prompt.iter().position(|&t| t == mask_id) {
            return Err(invalid(format!("prompt position {i} holds the mask id")));
        }
        let mut tokens = Vec::with_capacity(prompt.len() + gen_len);
        tokens.extend_from_slice(prompt);
        tokens.resize(prompt.len() + gen_len, mask_id);
        Ok(Self {
            tokens,
            prompt_len: prompt.len(),
            mask_id,
            block_len,
        })
    }

    /// Rebuild a state from raw parts, checking every invariant.
    pub fn from_parts(tokens: Vec<TokenId>, prompt_len: usize, mask_id: TokenId, block_len: usize) -> Result<Self> {
        if prompt_len >= tokens.len() {
            return Err(invalid("generation region is empty"));
        }
        if block_len == 0 {
            return Err(invalid("block_len must be at least 1"));
        }
        if let Some(i) = tokens[..prompt_len].iter().position(|&t| t == mask_id) {
            return Err(invalid(format!("prompt position {i} holds the mask id")));
        }
        Ok(Self {
            tokens,
            prompt_len,
            mask_id,
            block_len,
        })
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn prompt_len(&self) -> usize {
        self.prompt_len
    }

    pub fn gen_len(&self) -> usize {
        self.tokens.len() - self.prompt_len
    }

    pub fn mask_id(&self) -> TokenId {
        self.mask_id
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn generated(&self) -> &[TokenId] {
        &self.tokens[self.prompt_len..]
    }

    pub fn is_masked(&self, pos: Position) -> bool {
        self.tokens.get(pos) == Some(&self.mask_id)
    }

    pub fn masked_positions(&self) -> impl Iterator<Item = Position> + '_ {
        (self.prompt_len..self.tokens.len()).filter(move |&p| self.tokens[p] == self.mask_id)
    }

    pub fn mask_count(&self) -> usize {
        self.masked_positions().count()
    }

    pub fn has_masks(&self) -> bool {
        self.masked_positions().next().is_some()
    }

    pub fn schedule(&self) -> BlockSchedule {
        block_partition(self.prompt_len, self.gen_len(), self.block_len)
            .expect("state invariants guarantee a valid partition")
    }

    /// Lowest-indexed block that still holds a mask.
    pub fn current_block(&self) -> Option<usize> {
        current_block(self, &self.schedule())
    }

    /// Masked positions of block `index`, ascending.
    pub fn masked_in_block(&self, index: usize) -> Vec<Position> {
        let start = self.prompt_len + index * self.block_len;
        let end = (start + self.block_len).min(self.tokens.len());
        (start.min(end)..end).filter(|&p| self.tokens[p] == self.mask_id).collect()
    }

    /// Write `tok` into a masked position, returning the new snapshot.
    pub fn place_token(&self, pos: Position, tok: TokenId) -> Result<Self> {
        let mut next = self.clone();
        next.place_in_place(pos, tok)?;
        Ok(next)
    }

    pub(crate) fn place_in_place(&mut self, pos: Position, tok: TokenId) -> Result<()> {
        if !self.is_masked(pos) {
            return Err(Error::IllegalWrite { pos });
        }
        if tok == self.mask_id {
            return Err(invalid("cannot place the mask id"));
        }
        self.tokens[pos] = tok;
        Ok(())
    }

    /// One JSON object on a single line.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }

    pub fn from_line(line: &str) -> Result<Self> {
        let raw: RawState = serde_json::from_str(line.trim())?;
        Self::from_parts(raw.tokens, raw.prompt_len, raw.mask_id, raw.block_len)
    }
}

#[derive(Deserialize)]
struct RawState {
    tokens: Vec<TokenId>,
    prompt_len: usize,
    mask_id: TokenId,
    block_len: usize,
}

impl<'de> Deserialize<'de> for SequenceState {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = RawState::deserialize(de)?;
        Self::from_parts(raw.tokens, raw.prompt_len, raw.mask_id, raw.block_len).map_err(serde::de::Error::custom)
    }
}

/// The lowest-indexed block containing at least one masked position.
pub fn current_block(state: &SequenceState, schedule: &BlockSchedule) -> Option<usize> {
    schedule
        .blocks()
        .iter()
        .position(|b| b.clone().any(|p| state.is_masked(p)))
}
