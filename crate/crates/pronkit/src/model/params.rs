//! Flat parameter registry. Tensors live in one ordered table so gradients,
//! Adam state, checkpoints and the finite-difference harness all share a
//! single canonical ordering.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use super::{scalar, Scalar};

pub type ParamId = usize;

pub enum Init {
    Zeros,
    Ones,
    /// Xavier-uniform over (fan_in, fan_out).
    Xavier,
    /// Xavier-uniform shrunk by a factor (near-uniform output layers).
    ScaledXavier(f64),
}

#[derive(Debug, Clone)]
pub struct ParamSet<T> {
    names: Vec<String>,
    tensors: Vec<Array2<T>>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        ParamSet { names: Vec::new(), tensors: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, rows: usize, cols: usize, init: Init, rng: &mut ChaCha20Rng) -> ParamId {
        let tensor = match init {
            Init::Zeros => Array2::zeros((rows, cols)),
            Init::Ones => Array2::from_elem((rows, cols), T::one()),
            Init::Xavier => {
                let bound = (6.0 / (rows + cols) as f64).sqrt();
                Array2::from_shape_fn((rows, cols), |_| scalar::<T>(rng.gen_range(-bound..bound)))
            }
            Init::ScaledXavier(factor) => {
                let bound = factor * (6.0 / (rows + cols) as f64).sqrt();
                Array2::from_shape_fn((rows, cols), |_| scalar::<T>(rng.gen_range(-bound..bound)))
            }
        };
        self.names.push(name.into());
        self.tensors.push(tensor);
        self.tensors.len() - 1
    }

    pub fn get(&self, id: ParamId) -> &Array2<T> {
        &self.tensors[id]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Array2<T> {
        &mut self.tensors[id]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Array2<T>)> {
        self.names.iter().map(String::as_str).zip(self.tensors.iter())
    }

    pub fn total_elements(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    /// Replace a tensor wholesale (checkpoint loading).
    pub fn set(&mut self, id: ParamId, tensor: Array2<T>) {
        assert_eq!(self.tensors[id].dim(), tensor.dim(), "shape mismatch for {}", self.names[id]);
        self.tensors[id] = tensor;
    }
}

/// Gradient accumulators, shaped like a [`ParamSet`].
#[derive(Debug, Clone)]
pub struct Grads<T> {
    pub tensors: Vec<Array2<T>>,
}

impl<T: Scalar> Grads<T> {
    pub fn zeros_like(params: &ParamSet<T>) -> Self {
        Grads { tensors: params.tensors.iter().map(|t| Array2::zeros(t.dim())).collect() }
    }

    pub fn get(&self, id: ParamId) -> &Array2<T> {
        &self.tensors[id]
    }

    pub fn add_to(&mut self, id: ParamId, delta: &Array2<T>) {
        self.tensors[id] += delta;
    }
}
