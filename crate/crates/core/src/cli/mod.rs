//! Commands behind the `ssd` binary: decode, compare, analyze and sweep.

mod args;
mod config;
mod report;

pub use args::{run, Cli};
pub use config::{ModelSpec, Prepared, PromptSpec, RunConfig, Strategy};
pub use report::{CompareReport, CompareSummary, Report, Summary, DISCLAIMER};

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::analyzer::{percent, upper_bound, ReductionGrid};
use crate::error::{invalid, Error, Result};
use crate::ssd::ssd_decode;
use crate::stepwise::stepwise_decode;
use crate::trace::DecodeTrace;

/// Outcome of a single decode run.
pub struct DecodeRun {
    pub report: Report,
    pub trace: DecodeTrace,
}

/// Run the configured decoder. Writing files is left to the caller.
pub fn cmd_decode(config: &RunConfig) -> Result<DecodeRun> {
    let Prepared { model, state } = config.prepare()?;
    let (final_state, trace, forwards, rounds) = match config.strategy.tree_shape() {
        None => {
            let out = stepwise_decode(model.as_ref(), &state, config.topk)?;
            (out.state, out.trace, out.forwards, Vec::new())
        }
        Some(shape) => {
            let out = ssd_decode(model.as_ref(), &state, config.draft_len, shape, config.topk)?;
            (out.state, out.trace, out.forwards, out.rounds)
        }
    };
    let baseline = state.gen_len();
    let summary = Summary {
        strategy: config.strategy.name().to_string(),
        tokens: final_state.generated().to_vec(),
        baseline_forwards: baseline,
        forwards,
        reduction: 1.0 - forwards as f64 / baseline as f64,
        speedup: baseline as f64 / forwards as f64,
        disclaimer: DISCLAIMER.to_string(),
    };
    Ok(DecodeRun {
        report: Report {
            config: config.clone(),
            summary,
            rounds,
        },
        trace,
    })
}

/// Run both configs and check they produce the same tokens.
///
/// Configs must agree on everything that determines the output: seed, model,
/// prompt, lengths and mask id. A token mismatch is a losslessness violation.
pub fn cmd_compare(baseline: &RunConfig, candidate: &RunConfig) -> Result<CompareReport> {
    let same = baseline.seed == candidate.seed
        && baseline.model == candidate.model
        && baseline.prompt == candidate.prompt
        && baseline.gen_len == candidate.gen_len
        && baseline.block_len == candidate.block_len
        && baseline.mask_id == candidate.mask_id;
    if !same {
        return Err(invalid(
            "compared configs must share seed, model, prompt, gen_len, block_len and mask_id",
        ));
    }
    let a = cmd_decode(baseline)?.report;
    let b = cmd_decode(candidate)?.report;
    let identical = a.summary.tokens == b.summary.tokens;
    let summary = CompareSummary {
        baseline: a.summary.strategy.clone(),
        candidate: b.summary.strategy.clone(),
        identical,
        baseline_forwards: a.summary.forwards,
        candidate_forwards: b.summary.forwards,
        reduction: 1.0 - b.summary.forwards as f64 / a.summary.forwards as f64,
        speedup: a.summary.forwards as f64 / b.summary.forwards as f64,
    };
    if !identical {
        let at = a
            .summary
            .tokens
            .iter()
            .zip(&b.summary.tokens)
            .position(|(x, y)| x != y)
            .unwrap_or(0);
        return Err(Error::LosslessnessViolation(format!(
            "{} and {} differ at generated offset {at}",
            summary.baseline, summary.candidate
        )));
    }
    Ok(CompareReport {
        summary,
        baseline: a,
        candidate: b,
    })
}

pub fn cmd_analyze(trace: &DecodeTrace, draft_lengths: &[usize], ks: &[usize]) -> Result<ReductionGrid> {
    if draft_lengths.is_empty() || ks.is_empty() {
        return Err(invalid("need at least one draft length and one k"));
    }
    ReductionGrid::compute(trace, draft_lengths, ks)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub strategy: Strategy,
    pub draft_len: usize,
    pub batch_size: usize,
    pub runs: usize,
    pub mean_reduction: f64,
    pub min_reduction: f64,
    pub max_reduction: f64,
    pub upper_bound: f64,
}

/// For each (draft length, strategy), decode `runs` seeds starting at the
/// config's seed, check each against stepwise, and average the reduction.
pub fn cmd_sweep(base: &RunConfig, draft_lengths: &[usize], strategies: &[Strategy], runs: usize) -> Result<Vec<SweepRow>> {
    if runs == 0 {
        return Err(invalid("runs must be positive"));
    }
    let mut cells = Vec::new();
    for &n in draft_lengths {
        for &s in strategies {
            if s == Strategy::Stepwise {
                return Err(invalid("sweep strategies are compared against stepwise; pass greedy or mix_order"));
            }
            cells.push((n, s));
        }
    }
    cells
        .par_iter()
        .map(|&(n, strategy)| {
            let reductions = (0..runs as u64)
                .map(|i| {
                    let seed = base.seed.wrapping_add(i);
                    let cfg = RunConfig {
                        seed,
                        draft_len: n,
                        strategy,
                        out: None,
                        trace_out: None,
                        ..base.clone()
                    };
                    let stepwise = RunConfig {
                        strategy: Strategy::Stepwise,
                        ..cfg.clone()
                    };
                    cmd_compare(&stepwise, &cfg).map(|c| c.summary.reduction)
                })
                .collect::<Result<Vec<f64>>>()?;
            let shape = strategy.tree_shape().expect("non-stepwise");
            Ok(SweepRow {
                strategy,
                draft_len: n,
                batch_size: shape.node_count(n),
                runs,
                mean_reduction: reductions.iter().sum::<f64>() / runs as f64,
                min_reduction: reductions.iter().copied().fold(f64::INFINITY, f64::min),
                max_reduction: reductions.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                upper_bound: upper_bound(n)?,
            })
        })
        .collect()
}

pub fn render_sweep(rows: &[SweepRow]) -> String {
    let mut out = String::from("Draft Length | Strategy | Verification Batch Size | Step Reduction (mean) | min | max | Upper Bound\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{} | {} | {} | {} | {} | {} | {}",
            r.draft_len,
            r.strategy.name(),
            r.batch_size,
            percent(r.mean_reduction),
            percent(r.min_reduction),
            percent(r.max_reduction),
            percent(r.upper_bound)
        );
    }
    out
}
