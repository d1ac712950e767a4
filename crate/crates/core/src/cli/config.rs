use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{MaskedModel, SynthModel, SynthModelConfig, TableModel};
use crate::sequence::{SequenceState, TokenId};
use crate::ssd::TreeShape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Stepwise,
    Greedy,
    MixOrder,
}

impl Strategy {
    pub fn tree_shape(self) -> Option<TreeShape> {
        match self {
            Self::Stepwise => None,
            Self::Greedy => Some(TreeShape::Greedy),
            Self::MixOrder => Some(TreeShape::MixOrder),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Stepwise => "stepwise",
            Self::Greedy => "greedy",
            Self::MixOrder => "mix_order",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stepwise" => Ok(Self::Stepwise),
            "greedy" => Ok(Self::Greedy),
            "mix_order" | "mix-order" => Ok(Self::MixOrder),
            _ => Err(invalid(format!("unknown strategy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Seeded from the run's `seed`.
    Synth {
        vocab_size: usize,
        sharpness: f64,
        context_window: usize,
    },
    Table { path: PathBuf },
}

impl Default for ModelSpec {
    fn default() -> Self {
        let d = SynthModelConfig::default();
        Self::Synth {
            vocab_size: d.vocab_size,
            sharpness: d.sharpness,
            context_window: d.context_window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptSpec {
    Tokens(Vec<TokenId>),
    /// Whitespace- or comma-separated token ids.
    File(PathBuf),
    /// `n` tokens drawn from the run's seed.
    Random(usize),
}

impl Default for PromptSpec {
    fn default() -> Self {
        Self::Random(8)
    }
}

/// Everything that determines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub gen_len: usize,
    pub block_len: usize,
    pub draft_len: usize,
    pub strategy: Strategy,
    pub topk: usize,
    /// Defaults to the last vocabulary id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_id: Option<TokenId>,
    pub model: ModelSpec,
    pub prompt: PromptSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            gen_len: 256,
            block_len: 8,
            draft_len: 3,
            strategy: Strategy::Greedy,
            topk: 5,
            mask_id: None,
            model: ModelSpec::default(),
            prompt: PromptSpec::default(),
            out: None,
            trace_out: None,
        }
    }
}

/// A config resolved into a model and an initial state.
pub struct Prepared {
    pub model: Box<dyn MaskedModel>,
    pub state: SequenceState,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| invalid(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gen_len", self.gen_len),
            ("block_len", self.block_len),
            ("draft_len", self.draft_len),
        ] {
            if v == 0 {
                return Err(invalid(format!("{name} must be positive")));
            }
        }
        if let ModelSpec::Synth { vocab_size, sharpness, .. } = self.model {
            if vocab_size < 2 {
                return Err(invalid("vocab_size must be at least 2"));
            }
            if !(sharpness.is_finite() && sharpness > 0.0) {
                return Err(invalid("sharpness must be positive"));
            }
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<Box<dyn MaskedModel>> {
        Ok(match &self.model {
            ModelSpec::Synth {
                vocab_size,
                sharpness,
                context_window,
            } => Box::new(SynthModel::new(SynthModelConfig {
                seed: self.seed,
                vocab_size: *vocab_size,
                sharpness: *sharpness,
                context_window: *context_window,
            })?),
            ModelSpec::Table { path } => Box::new(TableModel::load(path)?),
        })
    }

    pub fn mask_id_for(&self, vocab_size: usize) -> TokenId {
        self.mask_id.unwrap_or(vocab_size as TokenId - 1)
    }

    pub fn prompt_tokens(&self, vocab_size: usize) -> Result<Vec<TokenId>> {
        let mask = self.mask_id_for(vocab_size);
        match &self.prompt {
            PromptSpec::Tokens(t) => Ok(t.clone()),
            PromptSpec::File(path) => std::fs::read_to_string(path)?
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|e| invalid(format!("prompt token {s:?}: {e}"))))
                .collect(),
            PromptSpec::Random(len) => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5EED_0F_9A0B);
                Ok((0..*len)
                    .map(|_| loop {
                        let t = rng.random_range(0..vocab_size as TokenId);
                        if t != mask {
                            break t;
                        }
                    })
                    .collect())
            }
        }
    }

    pub fn prepare(&self) -> Result<Prepared> {
        self.validate()?;
        let model = self.build_model()?;
        let v = model.vocab_size();
        let prompt = self.prompt_tokens(v)?;
        let state = SequenceState::new(&prompt, self.gen_len, self.mask_id_for(v), self.block_len)?;
        Ok(Prepared { model, state })
    }
}
