//! Dynamic token batching: length-bucketed, seeded shuffling, greedy packing
//! under a padded-token budget.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::codec::EncodedPair;
use crate::core::PAD_ID;

use super::ModelError;

/// One padded batch of encoded pairs. `tgt` rows are `[<bos> ... <eos> pad*]`.
#[derive(Debug, Clone)]
pub struct Batch {
    pub src: Array2<usize>,
    pub tgt: Array2<usize>,
    /// Indices into the pair list this batch was built from.
    pub members: Vec<usize>,
}

impl Batch {
    pub fn from_pairs(pairs: &[EncodedPair], members: Vec<usize>) -> Batch {
        let max_src = members.iter().map(|&i| pairs[i].src.len()).max().unwrap_or(0);
        let max_tgt = members.iter().map(|&i| pairs[i].tgt.len()).max().unwrap_or(0);
        let pad = PAD_ID as usize;
        let mut src = Array2::from_elem((members.len(), max_src), pad);
        let mut tgt = Array2::from_elem((members.len(), max_tgt), pad);
        for (row, &idx) in members.iter().enumerate() {
            for (col, &id) in pairs[idx].src.iter().enumerate() {
                src[(row, col)] = id as usize;
            }
            for (col, &id) in pairs[idx].tgt.iter().enumerate() {
                tgt[(row, col)] = id as usize;
            }
        }
        Batch { src, tgt, members }
    }
}

fn seeded_shuffle<R: Rng>(items: &mut [usize], rng: &mut R) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}

/// Bucket pairs by padded length and pack greedily so that
/// `batch_size * max(padded src, padded tgt) <= tokens_per_batch`.
///
/// The shuffle randomizes order within equal lengths and the final batch
/// order; every pair appears in exactly one batch. A pair that cannot fit in
/// a batch by itself is an error.
pub fn make_batches(pairs: &[EncodedPair], tokens_per_batch: usize, seed: u64) -> Result<Vec<Vec<usize>>, ModelError> {
    let cost_of = |pair: &EncodedPair| pair.src.len().max(pair.tgt.len());
    for (index, pair) in pairs.iter().enumerate() {
        if cost_of(pair) > tokens_per_batch {
            return Err(ModelError::OversizedPair { index, needed: cost_of(pair), budget: tokens_per_batch });
        }
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    seeded_shuffle(&mut order, &mut rng);
    order.sort_by_key(|&i| cost_of(&pairs[i]));

    let mut batches: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut max_src = 0usize;
    let mut max_tgt = 0usize;
    for &idx in &order {
        let new_src = max_src.max(pairs[idx].src.len());
        let new_tgt = max_tgt.max(pairs[idx].tgt.len());
        let cost = (current.len() + 1) * new_src.max(new_tgt);
        if !current.is_empty() && cost > tokens_per_batch {
            batches.push(std::mem::take(&mut current));
            max_src = 0;
            max_tgt = 0;
        }
        max_src = max_src.max(pairs[idx].src.len());
        max_tgt = max_tgt.max(pairs[idx].tgt.len());
        current.push(idx);
    }
    if !current.is_empty() {
        batches.push(current);
    }

    let mut batch_order: Vec<usize> = (0..batches.len()).collect();
    seeded_shuffle(&mut batch_order, &mut rng);
    Ok(batch_order.into_iter().map(|i| std::mem::take(&mut batches[i])).collect())
}
