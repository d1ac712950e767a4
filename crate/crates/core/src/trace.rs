//! Per-step decode records and their line-delimited serialization.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{predict_with_confidence, top_k, SequenceLogits};
use crate::sequence::{block_partition, Position, SequenceState, TokenId};

/// The stepwise rule's pick in a given state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Choice {
    pub position: Position,
    pub token: TokenId,
    pub confidence: f64,
}

impl Choice {
    pub fn placement(&self) -> (Position, TokenId) {
        (self.position, self.token)
    }
}

/// Highest-confidence masked position of the current block (ties to the lowest
/// position) with its argmax token. `None` when the state has no masks.
pub fn stepwise_choice(state: &SequenceState, logits: &SequenceLogits) -> Result<Option<Choice>> {
    let Some(block) = state.current_block() else {
        return Ok(None);
    };
    let mut best: Option<Choice> = None;
    for pos in state.masked_in_block(block) {
        let (token, confidence) = predict_with_confidence(logits.row(pos))?;
        if best.is_none_or(|b| confidence > b.confidence) {
            best = Some(Choice {
                position: pos,
                token,
                confidence,
            });
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionCandidates {
    pub pos: Position,
    /// `(token, probability)`, most probable first.
    pub top: Vec<(TokenId, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub position: Position,
    pub token: TokenId,
    pub confidence: f64,
    /// Top-K candidates at every masked position of the state before this step.
    pub candidates: Vec<PositionCandidates>,
}

impl TraceStep {
    pub fn record(state: &SequenceState, logits: &SequenceLogits, choice: Choice, topk: usize) -> Result<Self> {
        let candidates = if topk == 0 {
            Vec::new()
        } else {
            state
                .masked_positions()
                .map(|pos| Ok(PositionCandidates { pos, top: top_k(logits.row(pos), topk)? }))
                .collect::<Result<_>>()?
        };
        Ok(Self {
            position: choice.position,
            token: choice.token,
            confidence: choice.confidence,
            candidates,
        })
    }

    pub fn candidates_at(&self, pos: Position) -> Option<&[(TokenId, f64)]> {
        self.candidates
            .binary_search_by_key(&pos, |c| c.pos)
            .ok()
            .map(|i| self.candidates[i].top.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub prompt_len: usize,
    pub gen_len: usize,
    pub block_len: usize,
    pub vocab_size: usize,
    pub topk: usize,
}

/// One record per accepted token, in acceptance order.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeTrace {
    pub header: TraceHeader,
    pub steps: Vec<TraceStep>,
}

impl DecodeTrace {
    pub fn new(state: &SequenceState, vocab_size: usize, topk: usize) -> Self {
        Self {
            header: TraceHeader {
                prompt_len: state.prompt_len(),
                gen_len: state.gen_len(),
                block_len: state.block_len(),
                vocab_size,
                topk,
            },
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Index of the first step that fills a position outside the then-current
    /// block, or that fills a position twice.
    pub fn block_order_violation(&self) -> Option<usize> {
        let h = &self.header;
        let schedule = block_partition(h.prompt_len, h.gen_len, h.block_len).ok()?;
        let mut remaining: Vec<usize> = schedule.blocks().iter().map(|b| b.len()).collect();
        let mut filled = vec![false; h.gen_len];
        for (i, step) in self.steps.iter().enumerate() {
            let Some(block) = schedule.block_of(step.position) else {
                return Some(i);
            };
            let current = remaining.iter().position(|&r| r > 0);
            let offset = step.position - h.prompt_len;
            if current != Some(block) || filled[offset] {
                return Some(i);
            }
            filled[offset] = true;
            remaining[block] -= 1;
        }
        None
    }

    /// Header line followed by one line per step.
    pub fn to_lines(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for s in &self.steps {
            let _ = writeln!(out, "{}", serde_json::to_string(s).expect("step serializes"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or_else(|| invalid("empty trace"))?;
        let header: TraceHeader = serde_json::from_str(first).map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?;
        let steps = lines
            .map(|(n, l)| serde_json::from_str(l).map_err(|e| Error::Parse { line: n + 1, msg: e.to_string() }))
            .collect::<Result<_>>()?;
        Ok(Self { header, steps })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
