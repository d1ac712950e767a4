use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::{cmd_analyze, cmd_compare, cmd_decode, cmd_sweep, render_sweep, ModelSpec, PromptSpec, RunConfig, Strategy};
use crate::error::{invalid, Error, Result};
use crate::model::SynthModelConfig;
use crate::trace::DecodeTrace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_LOSSLESSNESS: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ssd", version, about = "Stepwise and self-speculative decoding for masked diffusion LMs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decode once and write a report.
    Decode(RunArgs),
    /// Decode with two strategies and check the outputs are identical.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Strategy of the reference run.
        #[arg(long, default_value = "stepwise")]
        baseline: String,
        /// Full config file for the reference run instead of `--baseline`.
        #[arg(long)]
        baseline_config: Option<PathBuf>,
    },
    /// Acceptance-limit grid from a recorded trace.
    Analyze {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "3,4,5")]
        draft_lengths: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        ks: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduction statistics over draft lengths, strategies and seeds.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_value = "3,4,5")]
        draft_lengths: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "greedy,mix_order")]
        strategies: Vec<String>,
        /// Seeds per cell, counting up from `--seed`.
        #[arg(long, default_value_t = 8)]
        runs: usize,
    },
}

/// Flags override values loaded from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML run config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "gen-length")]
    pub gen_length: Option<usize>,
    #[arg(long = "block-length")]
    pub block_length: Option<usize>,
    #[arg(long = "draft-length")]
    pub draft_length: Option<usize>,
    /// stepwise, greedy or mix_order.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub topk: Option<usize>,
    #[arg(long)]
    pub mask_id: Option<u32>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub sharpness: Option<f64>,
    #[arg(long)]
    pub context_window: Option<usize>,
    /// Use a table fixture instead of the synthetic model.
    #[arg(long, conflicts_with_all = ["vocab_size", "sharpness", "context_window"])]
    pub table: Option<PathBuf>,
    /// Comma-separated prompt token ids.
    #[arg(long, value_delimiter = ',', num_args = 0.., conflicts_with_all = ["prompt_file", "prompt_len"])]
    pub prompt: Option<Vec<u32>>,
    #[arg(long, conflicts_with = "prompt_len")]
    pub prompt_file: Option<PathBuf>,
    /// Random prompt of this length drawn from the seed.
    #[arg(long)]
    pub prompt_len: Option<usize>,
    /// Report destination (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the per-step trace.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.gen_length {
            c.gen_len = v;
        }
        if let Some(v) = self.block_length {
            c.block_len = v;
        }
        if let Some(v) = self.draft_length {
            c.draft_len = v;
        }
        if let Some(v) = &self.strategy {
            c.strategy = v.parse()?;
        }
        if let Some(v) = self.topk {
            c.topk = v;
        }
        if self.mask_id.is_some() {
            c.mask_id = self.mask_id;
        }
        if let Some(path) = &self.table {
            c.model = ModelSpec::Table { path: path.clone() };
        } else if self.vocab_size.is_some() || self.sharpness.is_some() || self.context_window.is_some() {
            let d = SynthModelConfig::default();
            let (v, s, w) = match c.model {
                ModelSpec::Synth {
                    vocab_size,
                    sharpness,
                    context_window,
                } => (vocab_size, sharpness, context_window),
                ModelSpec::Table { .. } => (d.vocab_size, d.sharpness, d.context_window),
            };
            c.model = ModelSpec::Synth {
                vocab_size: self.vocab_size.unwrap_or(v),
                sharpness: self.sharpness.unwrap_or(s),
                context_window: self.context_window.unwrap_or(w),
            };
        }
        if let Some(t) = &self.prompt {
            c.prompt = PromptSpec::Tokens(t.clone());
        } else if let Some(p) = &self.prompt_file {
            c.prompt = PromptSpec::File(p.clone());
        } else if let Some(n) = self.prompt_len {
            c.prompt = PromptSpec::Random(n);
        }
        if self.out.is_some() {
            c.out = self.out.clone();
        }
        if self.trace_out.is_some() {
            c.trace_out = self.trace_out.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Decode(args) => {
            let config = args.resolve()?;
            let run = cmd_decode(&config)?;
            if let Some(p) = &config.trace_out {
                std::fs::write(p, run.trace.to_lines())?;
            }
            write_output(config.out.as_ref(), &run.report.to_lines())
        }
        Command::Compare {
            run,
            baseline,
            baseline_config,
        } => {
            let candidate = run.resolve()?;
            let base = match baseline_config {
                Some(path) => RunConfig::load(path)?,
                None => RunConfig {
                    strategy: baseline.parse()?,
                    trace_out: None,
                    ..candidate.clone()
                },
            };
            let report = cmd_compare(&base, &candidate)?;
            write_output(candidate.out.as_ref(), &report.to_lines())
        }
        Command::Analyze {
            trace,
            draft_lengths,
            ks,
            out,
        } => {
            let trace = DecodeTrace::load(trace)?;
            let grid = cmd_analyze(&trace, &draft_lengths, &ks)?;
            write_output(out.as_ref(), &grid.render())
        }
        Command::Sweep {
            run,
            draft_lengths,
            strategies,
            runs,
        } => {
            let base = run.resolve()?;
            let strategies = strategies.iter().map(|s| s.parse()).collect::<Result<Vec<Strategy>>>()?;
            if draft_lengths.is_empty() || strategies.is_empty() {
                return Err(invalid("sweep needs draft lengths and strategies"));
            }
            let rows = cmd_sweep(&base, &draft_lengths, &strategies, runs)?;
            write_output(base.out.as_ref(), &render_sweep(&rows))
        }
    }
}

/// Parse `argv`, run the command and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::LosslessnessViolation(_) => EXIT_LOSSLESSNESS,
        _ => EXIT_USAGE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::LosslessnessViolation("x".into())), 2);
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), 1);
        assert_eq!(run(["ssd", "--version"]), 0);
        assert_eq!(run(["ssd", "decode", "--strategy", "beam"]), 1);
        assert_eq!(run(["ssd", "frobnicate"]), 1);
    }

    #[test]
    fn flags_override_config_defaults() {
        let args = RunArgs {
            gen_length: Some(16),
            vocab_size: Some(9),
            prompt: Some(vec![1, 2]),
            strategy: Some("mix-order".into()),
            ..RunArgs::default()
        };
        let c = args.resolve().unwrap();
        assert_eq!(c.gen_len, 16);
        assert_eq!(c.strategy, Strategy::MixOrder);
        assert_eq!(c.prompt, PromptSpec::Tokens(vec![1, 2]));
        assert!(matches!(c.model, ModelSpec::Synth { vocab_size: 9, .. }));
    }
}
