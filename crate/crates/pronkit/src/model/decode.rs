//! Greedy and beam decoding over a trained model.

use ndarray::{s, Array2};

use crate::core::{BOS_ID, EOS_ID, PAD_ID};

use super::transformer::Transformer;
use super::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput {
    /// Generated target ids, without the leading `<bos>`; includes the final
    /// `<eos>` when one was produced.
    pub ids: Vec<u32>,
    /// The sequence hit `max_len` without emitting `<eos>`.
    pub truncated: bool,
    /// Length-normalized log-probability of the generated tokens.
    pub score: f64,
}

fn log_softmax_row<T: Scalar>(row: &[T]) -> Vec<f64> {
    let max = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b.to_f64().unwrap()));
    let mut sum = 0.0f64;
    for &x in row {
        sum += (x.to_f64().unwrap() - max).exp();
    }
    let log_z = max + sum.ln();
    row.iter().map(|&x| x.to_f64().unwrap() - log_z).collect()
}

/// Iterative argmax decoding from `<bos>` until `<eos>` or `max_len` tokens.
/// `<pad>` and `<bos>` are never emitted; ties go to the lowest token id.
pub fn greedy_decode<T: Scalar>(model: &Transformer<T>, src: &[u32], max_len: usize) -> DecodeOutput {
    greedy_decode_batch(model, std::slice::from_ref(&src.to_vec()), max_len).pop().expect("one output")
}

/// Greedy decoding over a batch of sources at once.
pub fn greedy_decode_batch<T: Scalar>(model: &Transformer<T>, srcs: &[Vec<u32>], max_len: usize) -> Vec<DecodeOutput> {
    let b = srcs.len();
    if b == 0 {
        return Vec::new();
    }
    let pad = PAD_ID as usize;
    let max_src = srcs.iter().map(Vec::len).max().unwrap_or(0);
    let mut src_ids = Array2::from_elem((b, max_src), pad);
    for (row, src) in srcs.iter().enumerate() {
        for (col, &id) in src.iter().enumerate() {
            src_ids[(row, col)] = id as usize;
        }
    }
    let enc = model.encode(&src_ids, None);

    let mut prefixes = Array2::from_elem((b, 1), BOS_ID as usize);
    let mut outputs: Vec<Vec<u32>> = vec![Vec::new(); b];
    let mut scores = vec![0.0f64; b];
    let mut done = vec![false; b];
    for _ in 0..max_len {
        let logits = model.step_logits(&prefixes, &enc.enc_out, &src_ids);
        let mut next = Array2::from_elem((b, prefixes.dim().1 + 1), pad);
        next.slice_mut(s![.., ..prefixes.dim().1]).assign(&prefixes);
        for row in 0..b {
            if done[row] {
                // Keep feeding pad; masked everywhere, output ignored.
                next[(row, prefixes.dim().1)] = pad;
                continue;
            }
            let row_logits: Vec<T> = logits.row(row).to_vec();
            let log_probs = log_softmax_row(&row_logits);
            let mut best = usize::MAX;
            let mut best_val = f64::NEG_INFINITY;
            for (id, &lp) in log_probs.iter().enumerate() {
                if id == PAD_ID as usize || id == BOS_ID as usize {
                    continue;
                }
                if lp > best_val {
                    best_val = lp;
                    best = id;
                }
            }
            outputs[row].push(best as u32);
            scores[row] += best_val;
            if best == EOS_ID as usize {
                done[row] = true;
            }
            next[(row, prefixes.dim().1)] = best;
        }
        prefixes = next;
        if done.iter().all(|&d| d) {
            break;
        }
    }

    outputs
        .into_iter()
        .zip(done)
        .zip(scores)
        .map(|((ids, finished), score_sum)| {
            let len = ids.len().max(1) as f64;
            DecodeOutput { truncated: !finished, score: score_sum / len, ids }
        })
        .collect()
}

#[derive(Clone)]
struct Hypothesis {
    ids: Vec<u32>,
    log_prob: f64,
    finished: bool,
}

impl Hypothesis {
    fn normalized(&self) -> f64 {
        self.log_prob / self.ids.len().max(1) as f64
    }
}

/// Length-normalized beam search. `beam = 1` takes exactly the greedy path.
/// Ties between final hypotheses go to the lexicographically smaller token-id
/// sequence.
pub fn beam_decode<T: Scalar>(model: &Transformer<T>, src: &[u32], beam: usize, max_len: usize) -> DecodeOutput {
    assert!(beam >= 1, "beam width must be at least 1");
    let pad = PAD_ID as usize;
    let mut src_ids = Array2::from_elem((1, src.len()), pad);
    for (col, &id) in src.iter().enumerate() {
        src_ids[(0, col)] = id as usize;
    }
    let enc = model.encode(&src_ids, None);

    let mut live = vec![Hypothesis { ids: Vec::new(), log_prob: 0.0, finished: false }];
    let mut finished: Vec<Hypothesis> = Vec::new();

    for _ in 0..max_len {
        if live.is_empty() {
            break;
        }
        // Batch all live prefixes through the decoder.
        let b = live.len();
        let t = live[0].ids.len() + 1;
        let mut prefixes = Array2::from_elem((b, t), pad);
        let mut batch_src = Array2::from_elem((b, src.len()), pad);
        for (row, hyp) in live.iter().enumerate() {
            prefixes[(row, 0)] = BOS_ID as usize;
            for (col, &id) in hyp.ids.iter().enumerate() {
                prefixes[(row, col + 1)] = id as usize;
            }
            for (col, &id) in src.iter().enumerate() {
                batch_src[(row, col)] = id as usize;
            }
        }
        let enc_rows = if b == 1 {
            enc.enc_out.clone()
        } else {
            let mut tiled = ndarray::Array3::zeros((b, enc.enc_out.dim().1, enc.enc_out.dim().2));
            for row in 0..b {
                tiled.slice_mut(s![row, .., ..]).assign(&enc.enc_out.slice(s![0, .., ..]));
            }
            tiled
        };
        let logits = model.step_logits(&prefixes, &enc_rows, &batch_src);

        // Expand: every live hypothesis with every allowed token.
        let mut candidates: Vec<Hypothesis> = Vec::new();
        for (row, hyp) in live.iter().enumerate() {
            let row_logits: Vec<T> = logits.row(row).to_vec();
            let log_probs = log_softmax_row(&row_logits);
            for (id, &lp) in log_probs.iter().enumerate() {
                if id == PAD_ID as usize || id == BOS_ID as usize {
                    continue;
                }
                let mut ids = hyp.ids.clone();
                ids.push(id as u32);
                candidates.push(Hypothesis {
                    ids,
                    log_prob: hyp.log_prob + lp,
                    finished: id == EOS_ID as usize,
                });
            }
        }
        // Keep the top `beam` by cumulative log-probability; deterministic
        // tie-break on the token ids.
        candidates.sort_by(|a, b| {
            b.log_prob.partial_cmp(&a.log_prob).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.ids.cmp(&b.ids))
        });
        candidates.truncate(beam);
        live = Vec::new();
        for candidate in candidates {
            if candidate.finished {
                finished.push(candidate);
            } else {
                live.push(candidate);
            }
        }
    }

    // Truncated hypotheses only count when nothing finished.
    let (pool, truncated) = if finished.is_empty() { (live, true) } else { (finished, false) };
    let best = pool
        .into_iter()
        .max_by(|a, b| {
            a.normalized()
                .partial_cmp(&b.normalized())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| b.ids.cmp(&a.ids))
        })
        .expect("beam search always has at least one hypothesis");
    DecodeOutput { score: best.normalized(), ids: best.ids, truncated }
}
