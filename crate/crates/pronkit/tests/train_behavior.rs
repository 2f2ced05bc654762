//! Training loop behavior: determinism, learning progress, resume semantics.

use pronkit::model::{train, ModelConfig, Trainer, TrainConfig};
use pronkit::synthlang::{alphabetic_regular, gen_lexicon};

fn small_model(seed: u64) -> ModelConfig {
    ModelConfig {
        layers: 2,
        d_model: 32,
        heads: 2,
        ffn_dim: 64,
        dropout: 0.1,
        max_src_len: 32,
        max_tgt_len: 32,
        label_smoothing: 0.1,
        seed,
    }
}

#[test]
fn identical_seeds_give_identical_loss_sequences() {
    let spec = alphabetic_regular();
    let corpus = gen_lexicon(&spec, 60, 7).unwrap();
    let train_cfg = TrainConfig {
        max_steps: 25,
        warmup_steps: 100,
        tokens_per_batch: 512,
        dev_eval_every: 0,
        ..TrainConfig::default()
    };
    let a = train(small_model(3), &train_cfg, &corpus, &[]).unwrap();
    let b = train(small_model(3), &train_cfg, &corpus, &[]).unwrap();
    assert_eq!(a.losses, b.losses);
    assert_eq!(a.losses.len(), 25);

    let c = train(small_model(4), &train_cfg, &corpus, &[]).unwrap();
    assert_ne!(a.losses, c.losses);
}

#[test]
fn loss_decreases_on_small_corpus() {
    let spec = alphabetic_regular();
    let corpus = gen_lexicon(&spec, 40, 11).unwrap();
    let train_cfg = TrainConfig {
        max_steps: 120,
        warmup_steps: 60,
        tokens_per_batch: 1024,
        dev_eval_every: 0,
        ..TrainConfig::default()
    };
    let outcome = train(small_model(5), &train_cfg, &corpus, &[]).unwrap();
    let first = outcome.losses[0];
    let last = *outcome.losses.last().unwrap();
    assert!(last < first * 0.5, "loss failed to drop: {first} -> {last}");
}

#[test]
fn dev_eval_records_appear_on_schedule() {
    let spec = alphabetic_regular();
    let corpus = gen_lexicon(&spec, 40, 13).unwrap();
    let dev = gen_lexicon(&spec, 10, 14).unwrap();
    let train_cfg = TrainConfig {
        max_steps: 30,
        warmup_steps: 50,
        tokens_per_batch: 512,
        dev_eval_every: 10,
        ..TrainConfig::default()
    };
    let outcome = train(small_model(6), &train_cfg, &corpus, &dev).unwrap();
    assert_eq!(outcome.log.len(), 3);
    for (i, record) in outcome.log.iter().enumerate() {
        assert_eq!(record.step, (i as u64 + 1) * 10);
        assert!(record.dev_per.is_some());
        assert!(record.lr > 0.0);
    }
    assert!(outcome.best_dev_per.is_some());
}

#[test]
fn resume_continues_step_counter() {
    let spec = alphabetic_regular();
    let corpus = gen_lexicon(&spec, 30, 17).unwrap();
    let train_cfg = TrainConfig {
        max_steps: 12,
        warmup_steps: 50,
        tokens_per_batch: 512,
        dev_eval_every: 0,
        ..TrainConfig::default()
    };
    let first = train(small_model(8), &train_cfg, &corpus, &[]).unwrap();
    assert_eq!(first.checkpoint.step, 12);

    let resumed = Trainer::resume(first.checkpoint).run(&train_cfg, &corpus, &[]).unwrap();
    assert_eq!(resumed.checkpoint.step, 24);
}

#[test]
fn empty_corpus_is_an_error() {
    let train_cfg = TrainConfig::default();
    assert!(train(small_model(1), &train_cfg, &[], &[]).is_err());
}
