use std::collections::BTreeMap;

use crate::error::{invalid, Error, Result};
use crate::model::{top_k, MaskedModel, SequenceLogits};
use crate::sequence::{Position, SequenceState, TokenId};

#[derive(Debug, Clone, PartialEq)]
pub struct Draft {
    pub token: TokenId,
    pub confidence: f64,
    /// The most probable tokens at this position, `token` first. Holds more
    /// than one entry only when drafting for a k-ary tree.
    pub alternatives: Vec<TokenId>,
}

/// Argmax token and softmax confidence for every masked position of a state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DraftSet {
    drafts: BTreeMap<Position, Draft>,
}

impl DraftSet {
    /// Build drafts for the masked positions of `state` from a forward output,
    /// keeping `width` alternatives per position.
    pub fn from_logits(state: &SequenceState, logits: &SequenceLogits, width: usize) -> Result<Self> {
        if width == 0 {
            return Err(invalid("draft width must be at least 1"));
        }
        if width > logits.vocab_size() {
            return Err(invalid(format!(
                "draft width {width} exceeds vocab size {}",
                logits.vocab_size()
            )));
        }
        let mut drafts = BTreeMap::new();
        for pos in state.masked_positions() {
            let top = top_k(logits.row(pos), width)?;
            drafts.insert(
                pos,
                Draft {
                    token: top[0].0,
                    confidence: top[0].1,
                    alternatives: top.iter().map(|t| t.0).collect(),
                },
            );
        }
        Ok(Self { drafts })
    }

    pub fn get(&self, pos: Position) -> Option<&Draft> {
        self.drafts.get(&pos)
    }

    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        self.drafts.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Position, &Draft)> {
        self.drafts.iter().map(|(&p, d)| (p, d))
    }

    pub fn len(&self) -> usize {
        self.drafts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.drafts.is_empty()
    }
}

/// One forward over `state`, drafting every masked position.
pub fn self_draft<M: MaskedModel + ?Sized>(model: &M, state: &SequenceState) -> Result<DraftSet> {
    self_draft_with_width(model, state, 1)
}

pub fn self_draft_with_width<M: MaskedModel + ?Sized>(model: &M, state: &SequenceState, width: usize) -> Result<DraftSet> {
    if !state.has_masks() {
        return Err(Error::InvalidState("cannot draft a state without masks".into()));
    }
    let logits = model.forward(std::slice::from_ref(state))?;
    DraftSet::from_logits(state, &logits[0], width)
}

/// Candidate placements in verification priority order.
pub type CandidateList = Vec<(Position, TokenId)>;

fn ranked(state: &SequenceState, drafts: &DraftSet, block: usize) -> Vec<(Position, TokenId, f64)> {
    let mut v: Vec<_> = state
        .masked_in_block(block)
        .into_iter()
        .filter_map(|p| drafts.get(p).map(|d| (p, d.token, d.confidence)))
        .collect();
    v.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    v
}

/// Up to `n` candidates: the current block's masked positions by descending
/// draft confidence, topped up from the next block only when the current one
/// has fewer than `n` left.
pub fn select_candidates(state: &SequenceState, drafts: &DraftSet, n: usize) -> CandidateList {
    let Some(block) = state.current_block() else {
        return Vec::new();
    };
    let mut out: CandidateList = ranked(state, drafts, block)
        .into_iter()
        .take(n)
        .map(|(p, t, _)| (p, t))
        .collect();
    if out.len() < n {
        let need = n - out.len();
        out.extend(ranked(state, drafts, block + 1).into_iter().take(need).map(|(p, t, _)| (p, t)));
    }
    out
}
