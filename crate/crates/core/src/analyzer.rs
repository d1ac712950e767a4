//! Idealized acceptance limits computed from a stepwise trace.
//!
//! The trace is cut into fixed windows of `n + 1` steps. A step counts as
//! matched when its token is among the top-`k` candidates recorded for its
//! position at the window's first step. Every matched step after the first of
//! its window is one forward pass that a perfect verifier could have skipped.
//! This is an upper estimate: drafts are never re-drafted inside a window.

use std::fmt::Write as _;

use crate::error::{invalid, Result};
use crate::trace::DecodeTrace;

pub fn upper_bound(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("draft length must be at least 1"));
    }
    Ok(n as f64 / (n + 1) as f64)
}

/// `sum_{i=0..=n} k^i`, saturating.
pub fn kary_tree_size(k: usize, n: usize) -> usize {
    let mut total = 0usize;
    let mut level = 1usize;
    for _ in 0..=n {
        total = total.saturating_add(level);
        level = level.saturating_mul(k);
    }
    total
}

/// Saved forwards over total steps.
pub fn topk_match_reduction(trace: &DecodeTrace, n: usize, k: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("draft length must be at least 1"));
    }
    if k == 0 || k > trace.header.topk {
        return Err(invalid(format!(
            "k = {k} is outside the recorded candidate depth 1..={}",
            trace.header.topk
        )));
    }
    if trace.steps.is_empty() {
        return Ok(0.0);
    }
    let mut saved = 0usize;
    for window in trace.steps.chunks(n + 1) {
        let start = &window[0];
        let matched = window
            .iter()
            .filter(|step| {
                start
                    .candidates_at(step.position)
                    .is_some_and(|top| top.iter().take(k).any(|&(tok, _)| tok == step.token))
            })
            .count();
        saved += matched.saturating_sub(1);
    }
    Ok(saved as f64 / trace.steps.len() as f64)
}

/// Reduction for every `(draft length, k)` pair, rows in the order given.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionGrid {
    pub draft_lengths: Vec<usize>,
    pub ks: Vec<usize>,
    /// `cells[row][col]` for `draft_lengths[row]`, `ks[col]`.
    pub cells: Vec<Vec<f64>>,
}

impl ReductionGrid {
    pub fn compute(trace: &DecodeTrace, draft_lengths: &[usize], ks: &[usize]) -> Result<Self> {
        let cells = draft_lengths
            .iter()
            .map(|&n| ks.iter().map(|&k| topk_match_reduction(trace, n, k)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            draft_lengths: draft_lengths.to_vec(),
            ks: ks.to_vec(),
            cells,
        })
    }

    /// Plain-text table: one row per draft length, one column per k, then the
    /// upper bound. Percentages with one decimal.
    pub fn render(&self) -> String {
        let mut out = String::from("Draft Length");
        for k in &self.ks {
            let _ = write!(out, " | k={k}");
        }
        out.push_str(" | Upper Bound\n");
        for (n, row) in self.draft_lengths.iter().zip(&self.cells) {
            let _ = write!(out, "{n}");
            for cell in row {
                let _ = write!(out, " | {}", percent(*cell));
            }
            let ub = upper_bound(*n).unwrap_or(0.0);
            let _ = writeln!(out, " | {}", percent(ub));
        }
        out
    }
}

pub fn percent(x: f64) -> String {
    format!("{:.1}%", x * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{PositionCandidates, TraceHeader, TraceStep};

    #[test]
    fn upper_bounds() {
        assert_eq!(percent(upper_bound(3).unwrap()), "75.0%");
        assert_eq!(percent(upper_bound(4).unwrap()), "80.0%");
        assert_eq!(percent(upper_bound(5).unwrap()), "83.3%");
        assert!((upper_bound(5).unwrap() - 0.8333).abs() < 1e-4);
        assert!(upper_bound(0).is_err());
    }

    #[test]
    fn tree_sizes() {
        assert_eq!(kary_tree_size(2, 3), 15);
        assert_eq!(kary_tree_size(1, 3), 4);
        assert_eq!(kary_tree_size(3, 2), 1 + 3 + 9);
        assert_eq!(kary_tree_size(5, 0), 1);
        for n in 0..10 {
            assert_eq!(kary_tree_size(2, n), (1 << (n + 1)) - 1);
        }
    }

    /// Four steps over positions 0..4; each step's candidate lists put the token
    /// that is eventually chosen at rank `ranks[pos]` (0-based).
    fn synthetic_trace(ranks: [usize; 4]) -> DecodeTrace {
        let steps = (0..4)
            .map(|s| TraceStep {
                position: s,
                token: 10 + s as u32,
                confidence: 0.5,
                candidates: (s..4)
                    .map(|p| {
                        let mut top: Vec<(u32, f64)> = (0..3).map(|r| (100 + r, 0.1)).collect();
                        top[ranks[p]] = (10 + p as u32, 0.2);
                        PositionCandidates { pos: p, top }
                    })
                    .collect(),
            })
            .collect();
        DecodeTrace {
            header: TraceHeader {
                prompt_len: 0,
                gen_len: 4,
                block_len: 4,
                vocab_size: 200,
                topk: 3,
            },
            steps,
        }
    }

    #[test]
    fn hand_counted_reductions() {
        let t = synthetic_trace([0, 1, 0, 2]);
        // n = 3: one window; k=1 matches steps 0,2 -> saved 1; k=2 adds step 1 -> 2; k=3 all -> 3
        assert_eq!(topk_match_reduction(&t, 3, 1).unwrap(), 0.25);
        assert_eq!(topk_match_reduction(&t, 3, 2).unwrap(), 0.5);
        assert_eq!(topk_match_reduction(&t, 3, 3).unwrap(), 0.75);
        // n = 1: windows {0,1},{2,3}; k=1 -> saved 0 + 0; k=3 -> 1 + 1
        assert_eq!(topk_match_reduction(&t, 1, 1).unwrap(), 0.0);
        assert_eq!(topk_match_reduction(&t, 1, 3).unwrap(), 0.5);
        // n = 2: windows {0,1,2},{3}; k=3 -> 2 + 0
        assert_eq!(topk_match_reduction(&t, 2, 3).unwrap(), 0.5);
    }

    #[test]
    fn k_beyond_recorded_depth_is_invalid() {
        let t = synthetic_trace([0; 4]);
        assert!(topk_match_reduction(&t, 3, 4).is_err());
        assert!(topk_match_reduction(&t, 3, 0).is_err());
        assert!(topk_match_reduction(&t, 0, 1).is_err());
    }

    #[test]
    fn grid_renders_upper_bounds() {
        let t = synthetic_trace([0, 1, 0, 2]);
        let g = ReductionGrid::compute(&t, &[3], &[1, 2, 3]).unwrap();
        assert_eq!(g.render(), "Draft Length | k=1 | k=2 | k=3 | Upper Bound\n3 | 25.0% | 50.0% | 75.0% | 75.0%\n");
    }
}
