//! Versioned binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!   magic `PKPT`, format version u32,
//!   config: layers/d_model/heads/ffn_dim u32, dropout f32,
//!           max_src_len/max_tgt_len u32, label_smoothing f32, seed u64,
//!   vocab tables (source then target): count u32, then per token
//!           byte-length u32 + UTF-8 bytes,
//!   step u64, rng seed [u8; 32], rng word position u128,
//!   tensor count u32, then per tensor in registry order:
//!           name (u32 + bytes), rows u32, cols u32, rows*cols f32 values.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::core::Vocab;

use super::transformer::Transformer;
use super::{ModelConfig, ModelError};

const MAGIC: &[u8; 4] = b"PKPT";
const VERSION: u32 = 1;

/// Serialized RNG position so a resumed run continues the same stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub word_pos: u128,
}

impl RngState {
    pub fn from_rng(rng: &rand_chacha::ChaCha20Rng) -> Self {
        RngState { seed: rng.get_seed(), word_pos: rng.get_word_pos() }
    }

    pub fn to_rng(&self) -> rand_chacha::ChaCha20Rng {
        let mut rng = rand_chacha::ChaCha20Rng::from_seed(self.seed);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

use rand::SeedableRng;

/// A trained model with everything needed to decode: config, vocab,
/// parameters, step counter and RNG state.
pub struct Checkpoint {
    pub model: Transformer<f32>,
    pub vocab: Vocab,
    pub step: u64,
    pub rng: RngState,
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u128(&mut self, v: u128) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        if self.buf.len() < n {
            return Err(ModelError::BadCheckpoint("unexpected end of file".to_string()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }
    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn u128(&mut self) -> Result<u128, ModelError> {
        Ok(u128::from_le_bytes(self.take(16)?.try_into().unwrap()))
    }
    fn f32(&mut self) -> Result<f32, ModelError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn str(&mut self) -> Result<String, ModelError> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|e| ModelError::BadCheckpoint(e.to_string()))
    }
}

pub fn save_checkpoint(path: impl AsRef<Path>, checkpoint: &Checkpoint) -> Result<(), ModelError> {
    let mut w = Writer { buf: Vec::new() };
    w.buf.extend_from_slice(MAGIC);
    w.u32(VERSION);

    let cfg = &checkpoint.model.cfg;
    w.u32(cfg.layers as u32);
    w.u32(cfg.d_model as u32);
    w.u32(cfg.heads as u32);
    w.u32(cfg.ffn_dim as u32);
    w.f32(cfg.dropout as f32);
    w.u32(cfg.max_src_len as u32);
    w.u32(cfg.max_tgt_len as u32);
    w.f32(cfg.label_smoothing as f32);
    w.u64(cfg.seed);

    for table in [&checkpoint.vocab.source, &checkpoint.vocab.target] {
        w.u32(table.len() as u32);
        for token in table.tokens() {
            w.str(token);
        }
    }

    w.u64(checkpoint.step);
    w.buf.extend_from_slice(&checkpoint.rng.seed);
    w.u128(checkpoint.rng.word_pos);

    w.u32(checkpoint.model.params.len() as u32);
    for (name, tensor) in checkpoint.model.params.iter() {
        w.str(name);
        let (rows, cols) = tensor.dim();
        w.u32(rows as u32);
        w.u32(cols as u32);
        for &value in tensor.iter() {
            w.f32(value);
        }
    }

    // Atomic write: temp file then rename.
    let path = path.as_ref();
    let tmp = path.with_extension("tmp");
    let mut file = fs::File::create(&tmp)?;
    file.write_all(&w.buf)?;
    file.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, ModelError> {
    let mut bytes = Vec::new();
    fs::File::open(path.as_ref())?.read_to_end(&mut bytes)?;
    let mut r = Reader { buf: &bytes };

    if r.take(4)? != MAGIC {
        return Err(ModelError::BadCheckpoint("bad magic".to_string()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(ModelError::BadCheckpoint(format!("unsupported version {version}")));
    }

    let cfg = ModelConfig {
        layers: r.u32()? as usize,
        d_model: r.u32()? as usize,
        heads: r.u32()? as usize,
        ffn_dim: r.u32()? as usize,
        dropout: r.f32()? as f64,
        max_src_len: r.u32()? as usize,
        max_tgt_len: r.u32()? as usize,
        label_smoothing: r.f32()? as f64,
        seed: r.u64()?,
    };

    let mut tables = Vec::with_capacity(2);
    for _ in 0..2 {
        let count = r.u32()? as usize;
        let mut tokens = Vec::with_capacity(count);
        for _ in 0..count {
            tokens.push(r.str()?);
        }
        tables.push(tokens);
    }
    let target = tables.pop().unwrap();
    let source = tables.pop().unwrap();
    let vocab = Vocab::from_tables(source, target);

    let step = r.u64()?;
    let mut seed = [0u8; 32];
    seed.copy_from_slice(r.take(32)?);
    let word_pos = r.u128()?;

    let mut model = Transformer::<f32>::new(cfg, vocab.source.len(), vocab.target.len())?;
    let tensor_count = r.u32()? as usize;
    if tensor_count != model.params.len() {
        return Err(ModelError::BadCheckpoint(format!(
            "tensor count {tensor_count} does not match the architecture ({})",
            model.params.len()
        )));
    }
    for id in 0..tensor_count {
        let name = r.str()?;
        if name != model.params.name(id) {
            return Err(ModelError::BadCheckpoint(format!(
                "tensor {id} is `{name}`, expected `{}`",
                model.params.name(id)
            )));
        }
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        if (rows, cols) != model.params.get(id).dim() {
            return Err(ModelError::BadCheckpoint(format!("tensor `{name}` has unexpected shape {rows}x{cols}")));
        }
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            values.push(r.f32()?);
        }
        let tensor = Array2::from_shape_vec((rows, cols), values).expect("shape checked");
        model.params.set(id, tensor);
    }

    Ok(Checkpoint { model, vocab, step, rng: RngState { seed, word_pos } })
}
