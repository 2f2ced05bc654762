//! Transformer encoder-decoder with a from-scratch training loop: noam
//! schedule, Adam, dynamic token batching, greedy/beam decoding and a
//! versioned binary checkpoint format.

mod batch;
mod checkpoint;
mod decode;
mod layers;
mod optim;
mod params;
mod train;
mod transformer;

pub use batch::{make_batches, Batch};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, RngState};
pub use decode::{beam_decode, greedy_decode, greedy_decode_batch, DecodeOutput};
pub use optim::{noam_lr, Adam};
pub use params::{Grads, ParamId, ParamSet};
pub use train::{train, TrainLogRecord, TrainOutcome, Trainer};
pub use transformer::Transformer;

use std::path::PathBuf;

use thiserror::Error;

/// Float type the model math runs in. Training uses `f32`; the numerics
/// tests instantiate the same code at `f64`.
pub trait Scalar: ndarray::NdFloat {}
impl Scalar for f32 {}
impl Scalar for f64 {}

/// Cast an `f64` constant into the model scalar type.
pub(crate) fn scalar<T: Scalar>(x: f64) -> T {
    T::from(x).expect("finite constant")
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    BadConfig(String),
    #[error("pair {index} needs {needed} tokens, over the batch budget {budget}")]
    OversizedPair { index: usize, needed: usize, budget: usize },
    #[error("pair {index}: {side} length {len} exceeds the configured maximum {max}")]
    TooLong { index: usize, side: &'static str, len: usize, max: usize },
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: u64 },
    #[error("checkpoint: {0}")]
    BadCheckpoint(String),
    #[error(transparent)]
    Codec(#[from] crate::codec::CodecError),
    #[error(transparent)]
    Core(#[from] crate::core::CoreError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Architecture hyperparameters. The defaults are desk scale; the paper-scale
/// values (12 layers, 8000 warmup) remain expressible.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub layers: usize,
    pub d_model: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub dropout: f64,
    pub max_src_len: usize,
    pub max_tgt_len: usize,
    pub label_smoothing: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            layers: 3,
            d_model: 128,
            heads: 4,
            ffn_dim: 512,
            dropout: 0.1,
            max_src_len: 128,
            max_tgt_len: 128,
            label_smoothing: 0.1,
            seed: 42,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.layers == 0 || self.d_model == 0 || self.heads == 0 || self.ffn_dim == 0 {
            return Err(ModelError::BadConfig("all dimensions must be positive".to_string()));
        }
        if self.d_model % self.heads != 0 {
            return Err(ModelError::BadConfig(format!(
                "d_model {} not divisible by heads {}",
                self.d_model, self.heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::BadConfig(format!("dropout {} outside [0,1)", self.dropout)));
        }
        if !(0.0..1.0).contains(&self.label_smoothing) {
            return Err(ModelError::BadConfig(format!(
                "label smoothing {} outside [0,1)",
                self.label_smoothing
            )));
        }
        Ok(())
    }
}

/// Optimization and schedule settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_steps: u64,
    pub warmup_steps: u64,
    pub tokens_per_batch: usize,
    /// Multiplier on the noam learning rate; 1.0 is the schedule as defined.
    pub lr_factor: f64,
    pub checkpoint_every: u64,
    pub dev_eval_every: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Stop once dev PER reaches this value.
    pub early_stop_dev_per: Option<f64>,
    /// Where to write scheduled checkpoints; nothing is written when unset.
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_steps: 2000,
            warmup_steps: 400,
            tokens_per_batch: 4096,
            lr_factor: 1.0,
            checkpoint_every: 0,
            dev_eval_every: 200,
            beta1: 0.9,
            beta2: 0.998,
            epsilon: 1e-9,
            early_stop_dev_per: None,
            checkpoint_dir: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, cfg: &ModelConfig) -> Result<(), ModelError> {
        if self.warmup_steps == 0 {
            return Err(ModelError::BadConfig("warmup_steps must be at least 1".to_string()));
        }
        if self.tokens_per_batch < cfg.max_src_len.max(cfg.max_tgt_len) {
            return Err(ModelError::BadConfig(format!(
                "tokens_per_batch {} smaller than the longest allowed sequence {}",
                self.tokens_per_batch,
                cfg.max_src_len.max(cfg.max_tgt_len)
            )));
        }
        Ok(())
    }
}
