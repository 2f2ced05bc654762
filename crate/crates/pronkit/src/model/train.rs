//! Teacher-forced training with dev-set selection of the returned checkpoint.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{encode_entry, encode_source, EncodedPair};
use crate::core::{build_vocab, PronunciationEntry, Vocab};
use crate::metrics::per;

use super::batch::{make_batches, Batch};
use super::checkpoint::{save_checkpoint, Checkpoint, RngState};
use super::decode::greedy_decode_batch;
use super::optim::{noam_lr, Adam};
use super::transformer::Transformer;
use super::{ModelConfig, ModelError, TrainConfig};

/// One structured record per dev evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRecord {
    pub step: u64,
    pub lr: f64,
    pub train_loss: f64,
    pub dev_per: Option<f64>,
}

pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<TrainLogRecord>,
    /// Loss at every step, for determinism checks.
    pub losses: Vec<f64>,
    pub best_dev_per: Option<f64>,
}

/// Training state: a model, its vocab, and where the step counter starts.
pub struct Trainer {
    pub model: Transformer<f32>,
    pub vocab: Vocab,
    pub start_step: u64,
    rng: ChaCha20Rng,
}

impl Trainer {
    /// Fresh model over the vocabulary the training corpus defines.
    pub fn new(model_cfg: ModelConfig, corpus: &[PronunciationEntry]) -> Result<Self, ModelError> {
        if corpus.is_empty() {
            return Err(ModelError::EmptyCorpus);
        }
        let vocab = build_vocab(corpus)?;
        let seed = model_cfg.seed;
        let model = Transformer::<f32>::new(model_cfg, vocab.source.len(), vocab.target.len())?;
        Ok(Trainer {
            model,
            vocab,
            start_step: 0,
            rng: ChaCha20Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15),
        })
    }

    /// Continue from a checkpoint: same vocab, same RNG stream, step counter
    /// picks up where it stopped.
    pub fn resume(checkpoint: Checkpoint) -> Self {
        Trainer {
            rng: checkpoint.rng.to_rng(),
            start_step: checkpoint.step,
            model: checkpoint.model,
            vocab: checkpoint.vocab,
        }
    }

    fn encode_corpus(&self, corpus: &[PronunciationEntry]) -> Result<Vec<EncodedPair>, ModelError> {
        let cfg = &self.model.cfg;
        let mut pairs = Vec::with_capacity(corpus.len());
        for (index, entry) in corpus.iter().enumerate() {
            let pair = encode_entry(&self.vocab, entry)?;
            if pair.src.len() > cfg.max_src_len {
                return Err(ModelError::TooLong { index, side: "source", len: pair.src.len(), max: cfg.max_src_len });
            }
            if pair.tgt.len() > cfg.max_tgt_len + 1 {
                return Err(ModelError::TooLong { index, side: "target", len: pair.tgt.len(), max: cfg.max_tgt_len });
            }
            pairs.push(pair);
        }
        Ok(pairs)
    }

    fn dev_per(&self, dev: &[PronunciationEntry]) -> Result<Option<f64>, ModelError> {
        if dev.is_empty() {
            return Ok(None);
        }
        let mut hypotheses = Vec::with_capacity(dev.len());
        for chunk in dev.chunks(64) {
            let srcs: Result<Vec<Vec<u32>>, _> = chunk
                .iter()
                .map(|entry| encode_source(&self.vocab, &entry.locale, &entry.text))
                .collect();
            let outputs = greedy_decode_batch(&self.model, &srcs?, self.model.cfg.max_tgt_len);
            for output in outputs {
                hypotheses.push(crate::codec::decode_target(&self.vocab, &output.ids));
            }
        }
        let pairs: Vec<_> = dev.iter().zip(hypotheses.iter()).map(|(entry, hyp)| (&entry.pron, hyp)).collect();
        Ok(per(&pairs).ok())
    }

    /// Run the training loop. The returned checkpoint holds the parameters of
    /// the best dev evaluation (final parameters when dev never ran).
    pub fn run(
        mut self,
        train_cfg: &TrainConfig,
        corpus: &[PronunciationEntry],
        dev: &[PronunciationEntry],
    ) -> Result<TrainOutcome, ModelError> {
        train_cfg.validate(&self.model.cfg)?;
        if corpus.is_empty() {
            return Err(ModelError::EmptyCorpus);
        }
        let pairs = self.encode_corpus(corpus)?;
        let mut adam = Adam::new(&self.model.params, train_cfg);
        let mut log = Vec::new();
        let mut losses = Vec::new();
        let mut best: Option<(f64, crate::model::ParamSet<f32>, u64)> = None;
        let mut step = self.start_step;
        let end_step = self.start_step + train_cfg.max_steps;
        let d_model = self.model.cfg.d_model;
        let base_seed = self.model.cfg.seed;

        'training: for epoch in 0.. {
            let batches = make_batches(&pairs, train_cfg.tokens_per_batch, base_seed.wrapping_add(self.start_step).wrapping_add(epoch))?;
            for members in batches {
                step += 1;
                let batch = Batch::from_pairs(&pairs, members);
                let (loss, grads) = self.model.forward_backward(&batch, Some(&mut self.rng));
                if !loss.is_finite() {
                    return Err(ModelError::NonFiniteLoss { step });
                }
                losses.push(loss);
                let lr = train_cfg.lr_factor * noam_lr(step, d_model, train_cfg.warmup_steps);
                adam.step(&mut self.model.params, &grads, lr);

                if train_cfg.dev_eval_every > 0 && step % train_cfg.dev_eval_every == 0 {
                    let dev_per = self.dev_per(dev)?;
                    log.push(TrainLogRecord { step, lr, train_loss: loss, dev_per });
                    if let Some(value) = dev_per {
                        if best.as_ref().map_or(true, |(b, _, _)| value < *b) {
                            best = Some((value, self.model.params.clone(), step));
                        }
                        if train_cfg.early_stop_dev_per.is_some_and(|threshold| value <= threshold) {
                            break 'training;
                        }
                    }
                }
                if train_cfg.checkpoint_every > 0 && step % train_cfg.checkpoint_every == 0 {
                    if let Some(dir) = &train_cfg.checkpoint_dir {
                        std::fs::create_dir_all(dir)?;
                        save_checkpoint(dir.join("last.ckpt"), &self.as_checkpoint(step))?;
                    }
                }
                if step >= end_step {
                    break 'training;
                }
            }
        }

        let best_dev_per = best.as_ref().map(|(value, _, _)| *value);
        if let Some((_, params, _)) = best {
            self.model.params = params;
        }
        let checkpoint = self.as_checkpoint(step);
        if let Some(dir) = &train_cfg.checkpoint_dir {
            std::fs::create_dir_all(dir)?;
            save_checkpoint(dir.join("best.ckpt"), &checkpoint)?;
        }
        Ok(TrainOutcome { checkpoint, log, losses, best_dev_per })
    }

    fn as_checkpoint(&self, step: u64) -> Checkpoint {
        // Rebuild a model that shares nothing with the trainer.
        let cfg = self.model.cfg.clone();
        let mut model = Transformer::<f32>::new(cfg, self.vocab.source.len(), self.vocab.target.len())
            .expect("config was validated");
        for id in 0..model.params.len() {
            model.params.set(id, self.model.params.get(id).clone());
        }
        Checkpoint { model, vocab: self.vocab.clone(), step, rng: RngState::from_rng(&self.rng) }
    }
}

/// Train a model from scratch: vocabulary from the training corpus, dev PER
/// evaluated on schedule, checkpoint of the best dev step returned.
pub fn train(
    model_cfg: ModelConfig,
    train_cfg: &TrainConfig,
    corpus: &[PronunciationEntry],
    dev: &[PronunciationEntry],
) -> Result<TrainOutcome, ModelError> {
    Trainer::new(model_cfg, corpus)?.run(train_cfg, corpus, dev)
}
