//! Masked-diffusion decoding: a stepwise reference decoder and a lossless
//! self-speculative decoder that verifies several draft tokens per forward.

pub mod analyzer;
pub mod cli;
pub mod error;
pub mod model;
pub mod sequence;
pub mod ssd;
pub mod stepwise;
pub mod trace;

pub use error::{Error, Result};
pub use model::{MaskedModel, SynthModel, SynthModelConfig, TableModel};
pub use sequence::{block_partition, BlockSchedule, Position, SequenceState, TokenId};
pub use ssd::{ssd_decode, RoundStats, SsdOutput, TreeShape};
pub use stepwise::{stepwise_decode, StepwiseOutput};
pub use trace::DecodeTrace;
