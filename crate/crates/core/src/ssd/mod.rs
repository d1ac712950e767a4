//! Self-speculative decoding: draft every masked position from one forward,
//! verify a tree of candidate placements in one batched forward, and accept
//! exactly the tokens the stepwise rule would have produced.

mod draft;
mod tree;

pub use draft::{select_candidates, self_draft, self_draft_with_width, CandidateList, Draft, DraftSet};
pub use tree::{build_tree, TreeNode, TreeShape, VerificationTree};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{LogitsBatch, MaskedModel};
use crate::sequence::{Position, SequenceState, TokenId};
use crate::stepwise::finish_stepwise;
use crate::trace::{stepwise_choice, Choice, DecodeTrace, TraceStep};

/// Result of verifying one tree.
#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    /// Validated nodes from the root, each with its stepwise choice. The choice
    /// of `path[i]` is the `i`-th accepted token.
    pub path: Vec<(usize, Option<Choice>)>,
    pub logits: LogitsBatch,
}

impl VerifyOutcome {
    pub fn accepted(&self) -> Vec<(Position, TokenId)> {
        self.path.iter().filter_map(|(_, c)| c.map(|c| c.placement())).collect()
    }

    /// Node index of the deepest validated node.
    pub fn deepest(&self) -> usize {
        self.path.last().expect("path always holds the root").0
    }
}

/// One batched forward over every node, then walk from the root: descend into
/// the chain child whose expectation equals the node's stepwise choice, or stop
/// at a matching branch leaf, or stop. Every node on the walk contributes its
/// stepwise choice.
pub fn batch_verify<M: MaskedModel + ?Sized>(model: &M, tree: &VerificationTree) -> Result<VerifyOutcome> {
    let logits = model.forward(&tree.states())?;
    if logits.len() != tree.len() {
        return Err(Error::InvalidState("model returned a batch of the wrong size".into()));
    }
    let nodes = tree.nodes();
    let mut path = Vec::new();
    let mut at = 0;
    loop {
        let choice = stepwise_choice(&nodes[at].state, &logits[at])?;
        path.push((at, choice));
        let Some(c) = choice else { break };
        let matching = |branch: bool| {
            nodes[at]
                .children
                .iter()
                .copied()
                .find(|&ch| nodes[ch].branch == branch && nodes[ch].expectation == Some(c.placement()))
        };
        if let Some(child) = matching(false) {
            at = child;
        } else if let Some(leaf) = matching(true) {
            let choice = stepwise_choice(&nodes[leaf].state, &logits[leaf])?;
            path.push((leaf, choice));
            break;
        } else {
            break;
        }
    }
    Ok(VerifyOutcome { path, logits })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub iteration: usize,
    /// Sequences in this round's forward (tree size; 1 for a fallback step).
    pub batch_size: usize,
    pub accepted: usize,
    /// Forward passes so far, including this round and the initial draft.
    pub forwards: usize,
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct SsdOutput {
    pub state: SequenceState,
    pub rounds: Vec<RoundStats>,
    /// Per accepted token, the same record the stepwise decoder writes.
    pub trace: DecodeTrace,
    pub forwards: usize,
}

/// Decode `state` to completion with draft length `n` and the given tree shape.
pub fn ssd_decode<M: MaskedModel + ?Sized>(
    model: &M,
    state: &SequenceState,
    n: usize,
    shape: TreeShape,
    topk: usize,
) -> Result<SsdOutput> {
    if n == 0 {
        return Err(invalid("draft length must be at least 1"));
    }
    if !state.has_masks() {
        return Err(Error::InvalidState("nothing to decode: no masked positions".into()));
    }
    let width = shape.draft_width();
    let mut state = state.clone();
    let mut trace = DecodeTrace::new(&state, model.vocab_size(), topk);
    let mut rounds = Vec::new();

    let mut drafts = self_draft_with_width(model, &state, width)?;
    let mut forwards = 1;

    while state.has_masks() {
        let candidates = select_candidates(&state, &drafts, n);
        if candidates.len() < n {
            let mut iteration = rounds.len();
            let base = forwards;
            let mut steps = 0;
            finish_stepwise(model, &mut state, &mut trace, topk, |_| {
                steps += 1;
                rounds.push(RoundStats {
                    iteration,
                    batch_size: 1,
                    accepted: 1,
                    forwards: base + steps,
                    fallback: true,
                });
                iteration += 1;
            })?;
            forwards += steps;
            break;
        }

        let tree = build_tree(&state, &candidates, &drafts, shape)?;
        let outcome = batch_verify(model, &tree)?;
        forwards += 1;

        let mut accepted = 0;
        for &(node, choice) in &outcome.path {
            let Some(choice) = choice else { continue };
            let node_state = &tree.nodes()[node].state;
            trace.steps.push(TraceStep::record(node_state, &outcome.logits[node], choice, topk)?);
            state.place_in_place(choice.position, choice.token)?;
            accepted += 1;
        }
        debug_assert!(accepted >= 1, "the root always has a masked position");
        rounds.push(RoundStats {
            iteration: rounds.len(),
            batch_size: tree.len(),
            accepted,
            forwards,
            fallback: false,
        });

        // Refresh drafts from the deepest validated node's forward; positions it
        // saw as masked are a superset of what is still masked.
        let deepest = outcome.deepest();
        drafts = DraftSet::from_logits(&state, &outcome.logits[deepest], width)?;
    }

    Ok(SsdOutput {
        state,
        rounds,
        trace,
        forwards,
    })
}
