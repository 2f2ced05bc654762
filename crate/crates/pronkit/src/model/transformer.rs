//! Encoder-decoder assembly: post-layer-norm transformer with sinusoidal
//! positions, teacher-forced label-smoothed cross entropy and a full manual
//! backward pass.

use ndarray::{s, Array2, Array3};
use rand_chacha::ChaCha20Rng;

use crate::core::PAD_ID;

use super::batch::Batch;
use super::layers::{
    dropout_backward, dropout_forward, positional_encoding, AttnCache, DropoutCache, Embedding, FeedForward,
    FfnCache, LayerNorm, LayerNormCache, Linear, MultiHeadAttention,
};
use super::params::{Grads, Init, ParamSet};
use super::{scalar, ModelConfig, ModelError, Scalar};

use rand::SeedableRng;

struct EncoderLayer {
    attn: MultiHeadAttention,
    ln1: LayerNorm,
    ffn: FeedForward,
    ln2: LayerNorm,
}

struct DecoderLayer {
    self_attn: MultiHeadAttention,
    ln1: LayerNorm,
    cross_attn: MultiHeadAttention,
    ln2: LayerNorm,
    ffn: FeedForward,
    ln3: LayerNorm,
}

pub struct EncLayerCache<T> {
    attn: AttnCache<T>,
    attn_drop: DropoutCache<T>,
    ln1: LayerNormCache<T>,
    ffn: FfnCache<T>,
    ffn_drop: DropoutCache<T>,
    ln2: LayerNormCache<T>,
}

pub struct DecLayerCache<T> {
    self_attn: AttnCache<T>,
    self_drop: DropoutCache<T>,
    ln1: LayerNormCache<T>,
    cross_attn: AttnCache<T>,
    cross_drop: DropoutCache<T>,
    ln2: LayerNormCache<T>,
    ffn: FfnCache<T>,
    ffn_drop: DropoutCache<T>,
    ln3: LayerNormCache<T>,
}

impl<T: Scalar> EncLayerCache<T> {
    /// Pre-dropout attention probabilities: [B, H, Sq, Sk].
    pub fn attention_probabilities(&self) -> &ndarray::Array4<T> {
        &self.attn.attn
    }
}

pub struct EncodeCaches<T> {
    src_ids: Array2<usize>,
    emb_drop: DropoutCache<T>,
    pub layers: Vec<EncLayerCache<T>>,
    pub enc_out: Array3<T>,
}

pub struct DecodeCaches<T> {
    tgt_ids: Array2<usize>,
    emb_drop: DropoutCache<T>,
    layers: Vec<DecLayerCache<T>>,
    pub dec_out: Array3<T>,
}

/// The seq2seq model: configuration, parameter registry and layer handles.
pub struct Transformer<T: Scalar> {
    pub cfg: ModelConfig,
    pub src_vocab_size: usize,
    pub tgt_vocab_size: usize,
    pub params: ParamSet<T>,
    src_emb: Embedding,
    tgt_emb: Embedding,
    enc: Vec<EncoderLayer>,
    dec: Vec<DecoderLayer>,
    out_proj: Linear,
    posenc: Array2<T>,
}

impl<T: Scalar> Transformer<T> {
    pub fn new(cfg: ModelConfig, src_vocab_size: usize, tgt_vocab_size: usize) -> Result<Self, ModelError> {
        cfg.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
        let mut ps = ParamSet::new();
        let d = cfg.d_model;
        let ffn_dim = cfg.ffn_dim;

        let linear = |ps: &mut ParamSet<T>, name: String, rows: usize, cols: usize, bias: bool, rng: &mut ChaCha20Rng| Linear {
            w: ps.add(format!("{name}.w"), rows, cols, Init::Xavier, rng),
            b: bias.then(|| ps.add(format!("{name}.b"), 1, cols, Init::Zeros, rng)),
        };
        let layer_norm = |ps: &mut ParamSet<T>, name: String, rng: &mut ChaCha20Rng| LayerNorm {
            gamma: ps.add(format!("{name}.gamma"), 1, d, Init::Ones, rng),
            beta: ps.add(format!("{name}.beta"), 1, d, Init::Zeros, rng),
        };
        let attention = |ps: &mut ParamSet<T>, name: String, rng: &mut ChaCha20Rng| MultiHeadAttention {
            wq: linear(ps, format!("{name}.wq"), d, d, false, rng),
            wk: linear(ps, format!("{name}.wk"), d, d, false, rng),
            wv: linear(ps, format!("{name}.wv"), d, d, false, rng),
            wo: linear(ps, format!("{name}.wo"), d, d, false, rng),
            heads: cfg.heads,
        };

        let src_emb = Embedding { table: ps.add("src_emb", src_vocab_size, d, Init::Xavier, &mut rng) };
        let tgt_emb = Embedding { table: ps.add("tgt_emb", tgt_vocab_size, d, Init::Xavier, &mut rng) };
        let mut enc = Vec::with_capacity(cfg.layers);
        for i in 0..cfg.layers {
            enc.push(EncoderLayer {
                attn: attention(&mut ps, format!("enc.{i}.attn"), &mut rng),
                ln1: layer_norm(&mut ps, format!("enc.{i}.ln1"), &mut rng),
                ffn: FeedForward {
                    w1: linear(&mut ps, format!("enc.{i}.ffn.w1"), d, ffn_dim, true, &mut rng),
                    w2: linear(&mut ps, format!("enc.{i}.ffn.w2"), ffn_dim, d, true, &mut rng),
                },
                ln2: layer_norm(&mut ps, format!("enc.{i}.ln2"), &mut rng),
            });
        }
        let mut dec = Vec::with_capacity(cfg.layers);
        for i in 0..cfg.layers {
            dec.push(DecoderLayer {
                self_attn: attention(&mut ps, format!("dec.{i}.self_attn"), &mut rng),
                ln1: layer_norm(&mut ps, format!("dec.{i}.ln1"), &mut rng),
                cross_attn: attention(&mut ps, format!("dec.{i}.cross_attn"), &mut rng),
                ln2: layer_norm(&mut ps, format!("dec.{i}.ln2"), &mut rng),
                ffn: FeedForward {
                    w1: linear(&mut ps, format!("dec.{i}.ffn.w1"), d, ffn_dim, true, &mut rng),
                    w2: linear(&mut ps, format!("dec.{i}.ffn.w2"), ffn_dim, d, true, &mut rng),
                },
                ln3: layer_norm(&mut ps, format!("dec.{i}.ln3"), &mut rng),
            });
        }
        // A small output projection keeps the initial distribution near
        // uniform without blocking first-step gradient flow.
        let out_proj = Linear {
            w: ps.add("out_proj.w", d, tgt_vocab_size, Init::ScaledXavier(0.1), &mut rng),
            b: Some(ps.add("out_proj.b", 1, tgt_vocab_size, Init::Zeros, &mut rng)),
        };
        let posenc = positional_encoding(cfg.max_src_len.max(cfg.max_tgt_len) + 1, d);

        Ok(Transformer {
            cfg,
            src_vocab_size,
            tgt_vocab_size,
            params: ps,
            src_emb,
            tgt_emb,
            enc,
            dec,
            out_proj,
            posenc,
        })
    }

    fn pad_mask(ids: &Array2<usize>) -> Array2<bool> {
        ids.mapv(|id| id != PAD_ID as usize)
    }

    /// Run the encoder stack. `rng` enables dropout (training mode).
    pub fn encode(&self, src_ids: &Array2<usize>, mut rng: Option<&mut ChaCha20Rng>) -> EncodeCaches<T> {
        let src_mask = Self::pad_mask(src_ids);
        let dropout = self.cfg.dropout;
        let embedded = self.src_emb.forward(&self.params, src_ids, &self.posenc);
        let (mut x, emb_drop) = dropout_forward(embedded, dropout, rng.as_deref_mut());
        let mut layers = Vec::with_capacity(self.enc.len());
        for layer in &self.enc {
            let (attn_out, attn_cache) = layer.attn.forward(&self.params, &x, &x, &src_mask, false, dropout, rng.as_deref_mut());
            let (attn_out, attn_drop) = dropout_forward(attn_out, dropout, rng.as_deref_mut());
            let (x1, ln1_cache) = layer.ln1.forward(&self.params, &(&x + &attn_out));
            let (ffn_out, ffn_cache) = layer.ffn.forward(&self.params, &x1);
            let (ffn_out, ffn_drop) = dropout_forward(ffn_out, dropout, rng.as_deref_mut());
            let (x2, ln2_cache) = layer.ln2.forward(&self.params, &(&x1 + &ffn_out));
            layers.push(EncLayerCache {
                attn: attn_cache,
                attn_drop,
                ln1: ln1_cache,
                ffn: ffn_cache,
                ffn_drop,
                ln2: ln2_cache,
            });
            x = x2;
        }
        EncodeCaches { src_ids: src_ids.clone(), emb_drop, layers, enc_out: x }
    }

    /// Run the decoder stack over `tgt_ids` (teacher-forcing inputs).
    pub fn decode(
        &self,
        tgt_ids: &Array2<usize>,
        enc_out: &Array3<T>,
        src_ids: &Array2<usize>,
        mut rng: Option<&mut ChaCha20Rng>,
    ) -> DecodeCaches<T> {
        let src_mask = Self::pad_mask(src_ids);
        let tgt_mask = Self::pad_mask(tgt_ids);
        let dropout = self.cfg.dropout;
        let embedded = self.tgt_emb.forward(&self.params, tgt_ids, &self.posenc);
        let (mut x, emb_drop) = dropout_forward(embedded, dropout, rng.as_deref_mut());
        let mut layers = Vec::with_capacity(self.dec.len());
        for layer in &self.dec {
            let (self_out, self_cache) =
                layer.self_attn.forward(&self.params, &x, &x, &tgt_mask, true, dropout, rng.as_deref_mut());
            let (self_out, self_drop) = dropout_forward(self_out, dropout, rng.as_deref_mut());
            let (x1, ln1_cache) = layer.ln1.forward(&self.params, &(&x + &self_out));
            let (cross_out, cross_cache) =
                layer.cross_attn.forward(&self.params, &x1, enc_out, &src_mask, false, dropout, rng.as_deref_mut());
            let (cross_out, cross_drop) = dropout_forward(cross_out, dropout, rng.as_deref_mut());
            let (x2, ln2_cache) = layer.ln2.forward(&self.params, &(&x1 + &cross_out));
            let (ffn_out, ffn_cache) = layer.ffn.forward(&self.params, &x2);
            let (ffn_out, ffn_drop) = dropout_forward(ffn_out, dropout, rng.as_deref_mut());
            let (x3, ln3_cache) = layer.ln3.forward(&self.params, &(&x2 + &ffn_out));
            layers.push(DecLayerCache {
                self_attn: self_cache,
                self_drop,
                ln1: ln1_cache,
                cross_attn: cross_cache,
                cross_drop,
                ln2: ln2_cache,
                ffn: ffn_cache,
                ffn_drop,
                ln3: ln3_cache,
            });
            x = x3;
        }
        DecodeCaches { tgt_ids: tgt_ids.clone(), emb_drop, layers, dec_out: x }
    }

    /// Output logits for a decoder state: [B, T, V].
    pub fn project(&self, dec_out: &Array3<T>) -> Array3<T> {
        self.out_proj.forward3(&self.params, dec_out)
    }

    /// Teacher-forced logits for a batch (eval mode unless `rng` is given).
    pub fn forward(&self, batch: &Batch, mut rng: Option<&mut ChaCha20Rng>) -> (Array3<T>, EncodeCaches<T>, DecodeCaches<T>) {
        let tgt_in = batch.tgt.slice(s![.., ..batch.tgt.dim().1 - 1]).to_owned();
        let enc = self.encode(&batch.src, rng.as_deref_mut());
        let dec = self.decode(&tgt_in, &enc.enc_out, &batch.src, rng.as_deref_mut());
        let logits = self.project(&dec.dec_out);
        (logits, enc, dec)
    }

    /// Label-smoothed cross entropy, averaged over non-pad target tokens.
    /// Returns (loss, dlogits, token count). The smoothing mass is spread
    /// over the non-pad vocabulary excluding the gold label.
    pub fn loss(&self, logits: &Array3<T>, labels: &Array2<usize>) -> (f64, Array3<T>, usize) {
        let (b, t, v) = logits.dim();
        let eps = self.cfg.label_smoothing;
        let smooth_targets = v.saturating_sub(2);
        let (gold_mass, smooth_mass) = if eps > 0.0 && smooth_targets > 0 {
            (1.0 - eps, eps / smooth_targets as f64)
        } else {
            (1.0, 0.0)
        };

        let mut dlogits = Array3::<T>::zeros((b, t, v));
        let mut total_loss = 0.0f64;
        let mut n_tokens = 0usize;
        let pad = PAD_ID as usize;
        for bi in 0..b {
            for ti in 0..t {
                let gold = labels[(bi, ti)];
                if gold == pad {
                    continue;
                }
                n_tokens += 1;
                let row = logits.slice(s![bi, ti, ..]);
                // Stable log-softmax.
                let max = row.iter().fold(T::neg_infinity(), |a, &x| if x > a { x } else { a });
                let mut sum = T::zero();
                for &x in row.iter() {
                    sum += (x - max).exp();
                }
                let log_z = max + sum.ln();
                let mut loss_here = 0.0f64;
                let mut drow = dlogits.slice_mut(s![bi, ti, ..]);
                for j in 0..v {
                    let log_p = (row[j] - log_z).to_f64().expect("finite");
                    let p = log_p.exp();
                    let q = if j == gold {
                        gold_mass
                    } else if j != pad {
                        smooth_mass
                    } else {
                        0.0
                    };
                    if q > 0.0 {
                        loss_here -= q * log_p;
                    }
                    drow[j] = scalar(p - q);
                }
                total_loss += loss_here;
            }
        }
        if n_tokens > 0 {
            let inv = scalar::<T>(1.0 / n_tokens as f64);
            dlogits.mapv_inplace(|x| x * inv);
            total_loss /= n_tokens as f64;
        }
        (total_loss, dlogits, n_tokens)
    }

    /// Forward, loss and full backward. Returns (mean loss, gradients).
    pub fn forward_backward(&self, batch: &Batch, rng: Option<&mut ChaCha20Rng>) -> (f64, Grads<T>) {
        let (logits, enc, dec) = self.forward(batch, rng);
        let labels = batch.tgt.slice(s![.., 1..]).to_owned();
        let (loss, dlogits, _) = self.loss(&logits, &labels);
        let mut grads = Grads::zeros_like(&self.params);
        let d_dec_out = self.out_proj.backward3(&self.params, &mut grads, &dec.dec_out, &dlogits);
        let d_enc_out = self.backward_decoder(&mut grads, &dec, d_dec_out);
        self.backward_encoder(&mut grads, &enc, d_enc_out);
        (loss, grads)
    }

    fn backward_decoder(&self, grads: &mut Grads<T>, caches: &DecodeCaches<T>, mut dx: Array3<T>) -> Array3<T> {
        let enc_shape = caches.layers[0].cross_attn.kv_dims();
        let mut d_enc = Array3::<T>::zeros(enc_shape);
        for (layer, cache) in self.dec.iter().zip(caches.layers.iter()).rev() {
            let dr3 = layer.ln3.backward(&self.params, grads, &cache.ln3, &dx);
            let d_ffn_out = dropout_backward(&cache.ffn_drop, dr3.clone());
            let mut dx2 = layer.ffn.backward(&self.params, grads, &cache.ffn, &d_ffn_out);
            dx2 += &dr3;

            let dr2 = layer.ln2.backward(&self.params, grads, &cache.ln2, &dx2);
            let d_cross_out = dropout_backward(&cache.cross_drop, dr2.clone());
            let (mut dx1, d_enc_layer) = layer.cross_attn.backward(&self.params, grads, &cache.cross_attn, &d_cross_out);
            dx1 += &dr2;
            d_enc += &d_enc_layer;

            let dr1 = layer.ln1.backward(&self.params, grads, &cache.ln1, &dx1);
            let d_self_out = dropout_backward(&cache.self_drop, dr1.clone());
            let (dxq, dxkv) = layer.self_attn.backward(&self.params, grads, &cache.self_attn, &d_self_out);
            dx = dr1;
            dx += &dxq;
            dx += &dxkv;
        }
        let dx = dropout_backward(&caches.emb_drop, dx);
        self.tgt_emb.backward(grads, &caches.tgt_ids, &dx);
        d_enc
    }

    fn backward_encoder(&self, grads: &mut Grads<T>, caches: &EncodeCaches<T>, mut dx: Array3<T>) {
        for (layer, cache) in self.enc.iter().zip(caches.layers.iter()).rev() {
            let dr2 = layer.ln2.backward(&self.params, grads, &cache.ln2, &dx);
            let d_ffn_out = dropout_backward(&cache.ffn_drop, dr2.clone());
            let mut dx1 = layer.ffn.backward(&self.params, grads, &cache.ffn, &d_ffn_out);
            dx1 += &dr2;

            let dr1 = layer.ln1.backward(&self.params, grads, &cache.ln1, &dx1);
            let d_attn_out = dropout_backward(&cache.attn_drop, dr1.clone());
            let (dxq, dxkv) = layer.attn.backward(&self.params, grads, &cache.attn, &d_attn_out);
            dx = dr1;
            dx += &dxq;
            dx += &dxkv;
        }
        let dx = dropout_backward(&caches.emb_drop, dx);
        self.src_emb.backward(grads, &caches.src_ids, &dx);
    }

    /// Loss only, eval mode (used by the finite-difference gradient check).
    pub fn eval_loss(&self, batch: &Batch) -> f64 {
        let (logits, _, _) = self.forward(batch, None);
        let labels = batch.tgt.slice(s![.., 1..]).to_owned();
        self.loss(&logits, &labels).0
    }

    /// Per-sequence logits at the last position of each prefix, eval mode.
    pub fn step_logits(&self, tgt_prefix: &Array2<usize>, enc_out: &Array3<T>, src_ids: &Array2<usize>) -> Array2<T> {
        let dec = self.decode(tgt_prefix, enc_out, src_ids, None);
        let t = dec.dec_out.dim().1;
        let last = dec.dec_out.slice(s![.., t - 1..t, ..]).to_owned();
        let logits = self.project(&last);
        let (b, _, v) = logits.dim();
        logits.into_shape_with_order((b, v)).expect("standard layout")
    }

}
