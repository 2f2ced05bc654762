//! Noam learning-rate schedule and Adam.

use ndarray::Array2;

use super::params::{Grads, ParamSet};
use super::{scalar, Scalar, TrainConfig};

/// lr = d_model^-0.5 * min(step^-0.5, step * warmup^-1.5), step >= 1.
pub fn noam_lr(step: u64, d_model: usize, warmup: u64) -> f64 {
    assert!(step >= 1, "noam schedule is defined for step >= 1");
    let step = step as f64;
    let warmup = warmup as f64;
    (d_model as f64).powf(-0.5) * (step.powf(-0.5)).min(step * warmup.powf(-1.5))
}

/// Adam with bias correction; the learning rate comes from the caller each
/// step (noam schedule times a configurable factor).
pub struct Adam<T> {
    m: Vec<Array2<T>>,
    v: Vec<Array2<T>>,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: u64,
}

impl<T: Scalar> Adam<T> {
    pub fn new(params: &ParamSet<T>, cfg: &TrainConfig) -> Self {
        Adam {
            m: (0..params.len()).map(|i| Array2::zeros(params.get(i).dim())).collect(),
            v: (0..params.len()).map(|i| Array2::zeros(params.get(i).dim())).collect(),
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            epsilon: cfg.epsilon,
            step: 0,
        }
    }

    pub fn step(&mut self, params: &mut ParamSet<T>, grads: &Grads<T>, lr: f64) {
        self.step += 1;
        let b1 = scalar::<T>(self.beta1);
        let b2 = scalar::<T>(self.beta2);
        let one = T::one();
        let bias1 = scalar::<T>(1.0 - self.beta1.powi(self.step as i32));
        let bias2 = scalar::<T>(1.0 - self.beta2.powi(self.step as i32));
        let lr = scalar::<T>(lr);
        let eps = scalar::<T>(self.epsilon);
        for id in 0..params.len() {
            let g = &grads.tensors[id];
            let m = &mut self.m[id];
            let v = &mut self.v[id];
            let p = params.get_mut(id);
            ndarray::Zip::from(p).and(m).and(v).and(g).for_each(|p, m, v, &g| {
                *m = b1 * *m + (one - b1) * g;
                *v = b2 * *v + (one - b2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
            });
        }
    }
}
