//! Layer primitives with explicit forward caches and hand-written backward
//! passes. Shapes are noted as [batch, sequence, features].

use ndarray::{s, Array1, Array2, Array3, Array4, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::params::{Grads, ParamId, ParamSet};
use super::{scalar, Scalar};

/// Logit value for masked attention positions: large enough that the
/// exponential underflows to exactly zero after max subtraction.
const MASKED_LOGIT: f64 = -1e9;

pub fn flat2<T: Scalar>(x: &Array3<T>) -> ArrayView2<'_, T> {
    let (b, s, d) = x.dim();
    x.view().into_shape_with_order((b * s, d)).expect("standard layout")
}

fn unflat3<T: Scalar>(x: Array2<T>, b: usize, s: usize) -> Array3<T> {
    let d = x.dim().1;
    x.into_shape_with_order((b, s, d)).expect("standard layout")
}

// ---------------------------------------------------------------- linear

#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub w: ParamId,
    pub b: Option<ParamId>,
}

impl Linear {
    /// y = x @ w (+ b); x: [N, in], w: [in, out].
    pub fn forward2<T: Scalar>(&self, ps: &ParamSet<T>, x: &ArrayView2<T>) -> Array2<T> {
        let mut y = x.dot(ps.get(self.w));
        if let Some(b) = self.b {
            y += &ps.get(b).row(0);
        }
        y
    }

    pub fn forward3<T: Scalar>(&self, ps: &ParamSet<T>, x: &Array3<T>) -> Array3<T> {
        let (b, s, _) = x.dim();
        unflat3(self.forward2(ps, &flat2(x)), b, s)
    }

    /// Accumulates dW (and db), returns dx.
    pub fn backward2<T: Scalar>(
        &self,
        ps: &ParamSet<T>,
        grads: &mut Grads<T>,
        x: &ArrayView2<T>,
        dy: &ArrayView2<T>,
    ) -> Array2<T> {
        grads.tensors[self.w] += &x.t().dot(dy);
        if let Some(b) = self.b {
            let db = dy.sum_axis(Axis(0));
            grads.tensors[b] += &db.insert_axis(Axis(0));
        }
        dy.dot(&ps.get(self.w).t())
    }

    pub fn backward3<T: Scalar>(
        &self,
        ps: &ParamSet<T>,
        grads: &mut Grads<T>,
        x: &Array3<T>,
        dy: &Array3<T>,
    ) -> Array3<T> {
        let (b, s, _) = x.dim();
        unflat3(self.backward2(ps, grads, &flat2(x), &flat2(dy)), b, s)
    }
}

// ---------------------------------------------------------------- layer norm

#[derive(Debug, Clone, Copy)]
pub struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
}

pub struct LayerNormCache<T> {
    xhat: Array3<T>,
    inv_std: Array2<T>,
}

const LN_EPS: f64 = 1e-5;

impl LayerNorm {
    pub fn forward<T: Scalar>(&self, ps: &ParamSet<T>, x: &Array3<T>) -> (Array3<T>, LayerNormCache<T>) {
        let (b, s, d) = x.dim();
        let dd = scalar::<T>(d as f64);
        let eps = scalar::<T>(LN_EPS);
        let mut xhat = x.to_owned();
        let mut inv_std = Array2::zeros((b, s));
        for bi in 0..b {
            for si in 0..s {
                let mut row = xhat.slice_mut(s![bi, si, ..]);
                let mean = row.sum() / dd;
                row.mapv_inplace(|v| v - mean);
                let var = row.iter().fold(T::zero(), |acc, &v| acc + v * v) / dd;
                let inv = T::one() / (var + eps).sqrt();
                row.mapv_inplace(|v| v * inv);
                inv_std[(bi, si)] = inv;
            }
        }
        let gamma = ps.get(self.gamma).row(0);
        let beta = ps.get(self.beta).row(0);
        let mut y = xhat.to_owned();
        for bi in 0..b {
            for si in 0..s {
                let mut row = y.slice_mut(s![bi, si, ..]);
                for (di, v) in row.iter_mut().enumerate() {
                    *v = *v * gamma[di] + beta[di];
                }
            }
        }
        (y, LayerNormCache { xhat, inv_std })
    }

    pub fn backward<T: Scalar>(
        &self,
        ps: &ParamSet<T>,
        grads: &mut Grads<T>,
        cache: &LayerNormCache<T>,
        dy: &Array3<T>,
    ) -> Array3<T> {
        let (b, s, d) = dy.dim();
        let dd = scalar::<T>(d as f64);
        let gamma = ps.get(self.gamma).row(0).to_owned();
        let mut dgamma = Array1::<T>::zeros(d);
        let mut dbeta = Array1::<T>::zeros(d);
        let mut dx = Array3::<T>::zeros((b, s, d));
        for bi in 0..b {
            for si in 0..s {
                let dy_row = dy.slice(s![bi, si, ..]);
                let xhat_row = cache.xhat.slice(s![bi, si, ..]);
                let inv = cache.inv_std[(bi, si)];
                let mut g_mean = T::zero();
                let mut gx_mean = T::zero();
                for di in 0..d {
                    let g = dy_row[di] * gamma[di];
                    g_mean += g;
                    gx_mean += g * xhat_row[di];
                    dgamma[di] += dy_row[di] * xhat_row[di];
                    dbeta[di] += dy_row[di];
                }
                g_mean /= dd;
                gx_mean /= dd;
                let mut dx_row = dx.slice_mut(s![bi, si, ..]);
                for di in 0..d {
                    let g = dy_row[di] * gamma[di];
                    dx_row[di] = (g - g_mean - xhat_row[di] * gx_mean) * inv;
                }
            }
        }
        grads.tensors[self.gamma] += &dgamma.insert_axis(Axis(0));
        grads.tensors[self.beta] += &dbeta.insert_axis(Axis(0));
        dx
    }
}

// ---------------------------------------------------------------- dropout

/// Inverted dropout. The cache stores per-element factors (0 or 1/keep) so
/// backward is a single elementwise product; `None` means identity.
pub struct DropoutCache<T> {
    factors: Option<Array3<T>>,
}

pub fn dropout_forward<T: Scalar>(
    x: Array3<T>,
    p: f64,
    rng: Option<&mut ChaCha20Rng>,
) -> (Array3<T>, DropoutCache<T>) {
    match rng {
        Some(rng) if p > 0.0 => {
            let keep = scalar::<T>(1.0 / (1.0 - p));
            let factors = Array3::from_shape_fn(x.dim(), |_| if rng.gen_bool(1.0 - p) { keep } else { T::zero() });
            ((&x * &factors), DropoutCache { factors: Some(factors) })
        }
        _ => (x, DropoutCache { factors: None }),
    }
}

pub fn dropout_backward<T: Scalar>(cache: &DropoutCache<T>, dy: Array3<T>) -> Array3<T> {
    match &cache.factors {
        Some(factors) => &dy * factors,
        None => dy,
    }
}

// ---------------------------------------------------------------- softmax

/// Row-wise softmax in place. Masked entries must already hold
/// [`MASKED_LOGIT`]; after max subtraction they underflow to exactly zero.
pub fn softmax_rows_inplace<T: Scalar>(scores: &mut Array2<T>) {
    for mut row in scores.rows_mut() {
        let max = row.iter().fold(T::neg_infinity(), |a, &b| if b > a { b } else { a });
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

// ---------------------------------------------------------------- attention

#[derive(Debug, Clone, Copy)]
pub struct MultiHeadAttention {
    pub wq: Linear,
    pub wk: Linear,
    pub wv: Linear,
    pub wo: Linear,
    pub heads: usize,
}

pub struct AttnCache<T> {
    xq: Array3<T>,
    xkv: Array3<T>,
    q: Array3<T>,
    k: Array3<T>,
    v: Array3<T>,
    /// Softmax probabilities before dropout: [B, H, Sq, Sk].
    pub attn: Array4<T>,
    attn_dropped: Array4<T>,
    drop_keep: Option<f64>,
    drop_factors: Option<Array4<T>>,
    ctx: Array3<T>,
}

impl<T: Scalar> AttnCache<T> {
    pub fn kv_dims(&self) -> (usize, usize, usize) {
        self.xkv.dim()
    }
}

impl MultiHeadAttention {
    #[allow(clippy::too_many_arguments)]
    pub fn forward<T: Scalar>(
        &self,
        ps: &ParamSet<T>,
        xq: &Array3<T>,
        xkv: &Array3<T>,
        key_mask: &Array2<bool>,
        causal: bool,
        dropout: f64,
        mut rng: Option<&mut ChaCha20Rng>,
    ) -> (Array3<T>, AttnCache<T>) {
        let (b, sq, d) = xq.dim();
        let sk = xkv.dim().1;
        let heads = self.heads;
        let hd = d / heads;
        let scale = scalar::<T>(1.0 / (hd as f64).sqrt());
        let masked = scalar::<T>(MASKED_LOGIT);

        let q = self.wq.forward3(ps, xq);
        let k = self.wk.forward3(ps, xkv);
        let v = self.wv.forward3(ps, xkv);

        let mut attn = Array4::<T>::zeros((b, heads, sq, sk));
        let mut ctx = Array3::<T>::zeros((b, sq, d));
        for bi in 0..b {
            for h in 0..heads {
                let cols = h * hd..(h + 1) * hd;
                let qbh = q.slice(s![bi, .., cols.clone()]);
                let kbh = k.slice(s![bi, .., cols.clone()]);
                let mut scores = qbh.dot(&kbh.t());
                scores.mapv_inplace(|x| x * scale);
                for j in 0..sk {
                    if !key_mask[(bi, j)] {
                        scores.column_mut(j).fill(masked);
                    }
                }
                if causal {
                    for i in 0..sq {
                        for j in (i + 1)..sk {
                            scores[(i, j)] = masked;
                        }
                    }
                }
                softmax_rows_inplace(&mut scores);
                attn.slice_mut(s![bi, h, .., ..]).assign(&scores);
            }
        }

        // Attention dropout.
        let (attn_dropped, drop_factors, drop_keep) = match rng.as_deref_mut() {
            Some(rng) if dropout > 0.0 => {
                let keep = 1.0 - dropout;
                let factors = Array4::from_shape_fn(attn.dim(), |_| {
                    if rng.gen_bool(keep) {
                        scalar::<T>(1.0 / keep)
                    } else {
                        T::zero()
                    }
                });
                ((&attn * &factors), Some(factors), Some(keep))
            }
            _ => (attn.clone(), None, None),
        };

        for bi in 0..b {
            for h in 0..heads {
                let cols = h * hd..(h + 1) * hd;
                let abh = attn_dropped.slice(s![bi, h, .., ..]);
                let vbh = v.slice(s![bi, .., cols.clone()]);
                ctx.slice_mut(s![bi, .., cols]).assign(&abh.dot(&vbh));
            }
        }

        let out = self.wo.forward3(ps, &ctx);
        let cache = AttnCache {
            xq: xq.to_owned(),
            xkv: xkv.to_owned(),
            q,
            k,
            v,
            attn,
            attn_dropped,
            drop_keep,
            drop_factors,
            ctx,
        };
        (out, cache)
    }

    /// Returns (dxq, dxkv).
    pub fn backward<T: Scalar>(
        &self,
        ps: &ParamSet<T>,
        grads: &mut Grads<T>,
        cache: &AttnCache<T>,
        dout: &Array3<T>,
    ) -> (Array3<T>, Array3<T>) {
        let (b, sq, d) = cache.q.dim();
        let sk = cache.k.dim().1;
        let heads = self.heads;
        let hd = d / heads;
        let scale = scalar::<T>(1.0 / (hd as f64).sqrt());

        let dctx = self.wo.backward3(ps, grads, &cache.ctx, dout);

        let mut dq = Array3::<T>::zeros((b, sq, d));
        let mut dk = Array3::<T>::zeros((b, sk, d));
        let mut dv = Array3::<T>::zeros((b, sk, d));
        for bi in 0..b {
            for h in 0..heads {
                let cols = h * hd..(h + 1) * hd;
                let dctx_bh = dctx.slice(s![bi, .., cols.clone()]);
                let attn_bh = cache.attn.slice(s![bi, h, .., ..]);
                let dropped_bh = cache.attn_dropped.slice(s![bi, h, .., ..]);
                let vbh = cache.v.slice(s![bi, .., cols.clone()]);

                dv.slice_mut(s![bi, .., cols.clone()]).assign(&dropped_bh.t().dot(&dctx_bh));

                let mut d_attn = dctx_bh.dot(&vbh.t());
                if let (Some(factors), Some(_)) = (&cache.drop_factors, cache.drop_keep) {
                    d_attn *= &factors.slice(s![bi, h, .., ..]);
                }

                // Softmax backward per row; masked entries have attn == 0 and
                // drop out naturally.
                let mut dscores = Array2::<T>::zeros((sq, sk));
                for i in 0..sq {
                    let mut dot = T::zero();
                    for j in 0..sk {
                        dot += attn_bh[(i, j)] * d_attn[(i, j)];
                    }
                    for j in 0..sk {
                        dscores[(i, j)] = attn_bh[(i, j)] * (d_attn[(i, j)] - dot);
                    }
                }
                dscores.mapv_inplace(|x| x * scale);

                let kbh = cache.k.slice(s![bi, .., cols.clone()]);
                let qbh = cache.q.slice(s![bi, .., cols.clone()]);
                dq.slice_mut(s![bi, .., cols.clone()]).assign(&dscores.dot(&kbh));
                dk.slice_mut(s![bi, .., cols]).assign(&dscores.t().dot(&qbh));
            }
        }

        let dxq = self.wq.backward3(ps, grads, &cache.xq, &dq);
        let mut dxkv = self.wk.backward3(ps, grads, &cache.xkv, &dk);
        dxkv += &self.wv.backward3(ps, grads, &cache.xkv, &dv);
        (dxq, dxkv)
    }
}

// ---------------------------------------------------------------- feed forward

#[derive(Debug, Clone, Copy)]
pub struct FeedForward {
    pub w1: Linear,
    pub w2: Linear,
}

pub struct FfnCache<T> {
    x: Array3<T>,
    pre_relu: Array3<T>,
    hidden: Array3<T>,
}

impl FeedForward {
    pub fn forward<T: Scalar>(&self, ps: &ParamSet<T>, x: &Array3<T>) -> (Array3<T>, FfnCache<T>) {
        let pre_relu = self.w1.forward3(ps, x);
        let hidden = pre_relu.mapv(|v| if v > T::zero() { v } else { T::zero() });
        let y = self.w2.forward3(ps, &hidden);
        (y, FfnCache { x: x.to_owned(), pre_relu, hidden })
    }

    pub fn backward<T: Scalar>(
        &self,
        ps: &ParamSet<T>,
        grads: &mut Grads<T>,
        cache: &FfnCache<T>,
        dy: &Array3<T>,
    ) -> Array3<T> {
        let dhidden = self.w2.backward3(ps, grads, &cache.hidden, dy);
        let mut dpre = dhidden;
        ndarray::Zip::from(&mut dpre).and(&cache.pre_relu).for_each(|g, &p| {
            if p <= T::zero() {
                *g = T::zero();
            }
        });
        self.w1.backward3(ps, grads, &cache.x, &dpre)
    }
}

// ---------------------------------------------------------------- embedding

#[derive(Debug, Clone, Copy)]
pub struct Embedding {
    pub table: ParamId,
}

impl Embedding {
    /// Lookup scaled by sqrt(d_model), plus the fixed positional encoding.
    pub fn forward<T: Scalar>(&self, ps: &ParamSet<T>, ids: &Array2<usize>, posenc: &Array2<T>) -> Array3<T> {
        let (b, s) = ids.dim();
        let table = ps.get(self.table);
        let d = table.dim().1;
        let scale = scalar::<T>((d as f64).sqrt());
        let mut x = Array3::<T>::zeros((b, s, d));
        for bi in 0..b {
            for si in 0..s {
                let row = table.row(ids[(bi, si)]);
                let pos = posenc.row(si);
                let mut out = x.slice_mut(s![bi, si, ..]);
                for di in 0..d {
                    out[di] = row[di] * scale + pos[di];
                }
            }
        }
        x
    }

    pub fn backward<T: Scalar>(&self, grads: &mut Grads<T>, ids: &Array2<usize>, dx: &Array3<T>) {
        let (b, s, d) = dx.dim();
        let scale = scalar::<T>((d as f64).sqrt());
        let table_grad = &mut grads.tensors[self.table];
        for bi in 0..b {
            for si in 0..s {
                let src = dx.slice(s![bi, si, ..]);
                let mut row = table_grad.row_mut(ids[(bi, si)]);
                for di in 0..d {
                    row[di] += src[di] * scale;
                }
            }
        }
    }
}

/// Fixed sinusoidal positional encodings: [max_len, d_model].
pub fn positional_encoding<T: Scalar>(max_len: usize, d_model: usize) -> Array2<T> {
    let mut pe = Array2::<T>::zeros((max_len, d_model));
    for pos in 0..max_len {
        for i in 0..d_model / 2 {
            let angle = pos as f64 / 10000f64.powf(2.0 * i as f64 / d_model as f64);
            pe[(pos, 2 * i)] = scalar(angle.sin());
            if 2 * i + 1 < d_model {
                pe[(pos, 2 * i + 1)] = scalar(angle.cos());
            }
        }
    }
    pe
}
