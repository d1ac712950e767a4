//! Verification trees over candidate placements.
//!
//! Node 0 is the root (the base state). A chain node at depth `d` has the first
//! `d` candidates placed. Each non-root node carries the placement its parent's
//! stepwise choice must equal for the node to be validated.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::draft::{CandidateList, DraftSet};
use crate::error::{invalid, Result};
use crate::sequence::{Position, SequenceState, TokenId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeShape {
    /// Linear chain, `N + 1` nodes.
    Greedy,
    /// Chain plus one grandchild-skip leaf per chain node that has a grandchild, `2N` nodes.
    MixOrder,
    /// Complete tree over the top-`k` draft tokens of each candidate position.
    Kary(usize),
}

impl TreeShape {
    /// Node count for draft length `n`.
    pub fn node_count(self, n: usize) -> usize {
        match self {
            Self::Greedy => n + 1,
            Self::MixOrder => 2 * n,
            Self::Kary(k) => crate::analyzer::kary_tree_size(k, n),
        }
    }

    /// Alternatives needed per drafted position.
    pub fn draft_width(self) -> usize {
        match self {
            Self::Kary(k) => k,
            _ => 1,
        }
    }
}

impl fmt::Display for TreeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Greedy => f.write_str("greedy"),
            Self::MixOrder => f.write_str("mix_order"),
            Self::Kary(k) => write!(f, "kary{k}"),
        }
    }
}

impl FromStr for TreeShape {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Self::Greedy),
            "mix_order" | "mix-order" => Ok(Self::MixOrder),
            _ => s
                .strip_prefix("kary")
                .and_then(|k| k.parse().ok())
                .filter(|&k| k >= 1)
                .map(Self::Kary)
                .ok_or_else(|| invalid(format!("unknown tree shape {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub state: SequenceState,
    pub parent: Option<usize>,
    pub expectation: Option<(Position, TokenId)>,
    /// Grandchild-skip leaf of a mix-order tree.
    pub branch: bool,
    /// Number of candidate tokens placed.
    pub depth: usize,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationTree {
    nodes: Vec<TreeNode>,
    shape: TreeShape,
}

impl VerificationTree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn shape(&self) -> TreeShape {
        self.shape
    }

    pub fn states(&self) -> Vec<SequenceState> {
        self.nodes.iter().map(|n| n.state.clone()).collect()
    }

    fn push(&mut self, parent: usize, pos: Position, tok: TokenId, branch: bool, state: SequenceState) -> usize {
        let id = self.nodes.len();
        let depth = self.nodes[parent].depth + 1;
        self.nodes.push(TreeNode {
            state,
            parent: Some(parent),
            expectation: Some((pos, tok)),
            branch,
            depth,
            children: Vec::new(),
        });
        self.nodes[parent].children.push(id);
        id
    }
}

/// Materialize the tree for `candidates` over `base`.
pub fn build_tree(
    base: &SequenceState,
    candidates: &CandidateList,
    drafts: &DraftSet,
    shape: TreeShape,
) -> Result<VerificationTree> {
    let n = candidates.len();
    if n == 0 {
        return Err(invalid("draft length must be at least 1"));
    }
    let mut tree = VerificationTree {
        nodes: vec![TreeNode {
            state: base.clone(),
            parent: None,
            expectation: None,
            branch: false,
            depth: 0,
            children: Vec::new(),
        }],
        shape,
    };
    match shape {
        TreeShape::Greedy | TreeShape::MixOrder => {
            let mut chain = vec![0];
            for &(pos, tok) in candidates {
                let parent = *chain.last().unwrap();
                let state = tree.nodes[parent].state.place_token(pos, tok)?;
                chain.push(tree.push(parent, pos, tok, false, state));
            }
            if shape == TreeShape::MixOrder {
                for d in 0..n.saturating_sub(1) {
                    let (pos, tok) = candidates[d + 1];
                    let state = tree.nodes[chain[d]].state.place_token(pos, tok)?;
                    tree.push(chain[d], pos, tok, true, state);
                }
            }
        }
        TreeShape::Kary(k) => {
            if k == 0 {
                return Err(invalid("k-ary tree needs k >= 1"));
            }
            let mut frontier = vec![0];
            for &(pos, _) in candidates {
                let alts = drafts
                    .get(pos)
                    .map(|d| &d.alternatives)
                    .filter(|a| a.len() >= k)
                    .ok_or_else(|| invalid(format!("position {pos} lacks {k} draft alternatives")))?;
                let mut next = Vec::with_capacity(frontier.len() * k);
                for &parent in &frontier {
                    for &tok in &alts[..k] {
                        let state = tree.nodes[parent].state.place_token(pos, tok)?;
                        next.push(tree.push(parent, pos, tok, false, state));
                    }
                }
                frontier = next;
            }
        }
    }
    debug_assert_eq!(tree.len(), shape.node_count(n));
    Ok(tree)
}
