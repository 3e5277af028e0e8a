use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Scalar, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
    pub adam_m: Tensor<T>,
    pub adam_v: Tensor<T>,
    has_grad: bool,
}

impl<T: Scalar> Param<T> {
    fn new(value: Tensor<T>) -> Self {
        let zeros = Tensor::zeros(value.shape());
        Self {
            grad: zeros.clone(),
            adam_m: zeros.clone(),
            adam_v: zeros,
            value,
            has_grad: false,
        }
    }

    pub fn has_grad(&self) -> bool {
        self.has_grad
    }
}

/// Named learnable tensors with their gradients and Adam moments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore<T> {
    entries: BTreeMap<String, Param<T>>,
    step_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self {
            entries: BTreeMap::new(),
            step_count: 0,
        }
    }

    /// Adds (or replaces) a parameter with zeroed gradient and moments.
    pub fn insert(&mut self, name: &str, value: Tensor<T>) {
        self.entries.insert(name.to_string(), Param::new(value));
    }

    /// Restores a parameter together with its optimizer moments.
    pub fn insert_with_state(
        &mut self,
        name: &str,
        value: Tensor<T>,
        adam_m: Tensor<T>,
        adam_v: Tensor<T>,
    ) -> Result<()> {
        if adam_m.shape() != value.shape() || adam_v.shape() != value.shape() {
            return Err(Error::shape("optimizer state", value.shape(), adam_m.shape()));
        }
        let mut p = Param::new(value);
        p.adam_m = adam_m;
        p.adam_v = adam_v;
        self.entries.insert(name.to_string(), p);
        Ok(())
    }

    pub fn set_step_count(&mut self, steps: u64) {
        self.step_count = steps;
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param<T>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn param(&self, name: &str) -> Result<&Param<T>> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn value(&self, name: &str) -> Result<&Tensor<T>> {
        Ok(&self.param(name)?.value)
    }

    pub fn value_mut(&mut self, name: &str) -> Result<&mut Tensor<T>> {
        self.entries
            .get_mut(name)
            .map(|p| &mut p.value)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn grad(&self, name: &str) -> Result<&Tensor<T>> {
        Ok(&self.param(name)?.grad)
    }

    pub fn accumulate_grad(&mut self, name: &str, grad: &Tensor<T>) -> Result<()> {
        let p = self
            .entries
            .get_mut(name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))?;
        if p.grad.len() != grad.len() {
            return Err(Error::shape("gradient", p.value.shape(), grad.shape()));
        }
        for (a, &b) in p.grad.data_mut().iter_mut().zip(grad.data()) {
            *a += b;
        }
        p.has_grad = true;
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        for p in self.entries.values_mut() {
            p.grad.fill(T::zero());
            p.has_grad = false;
        }
    }

    pub fn scale_grads(&mut self, factor: T) {
        for p in self.entries.values_mut() {
            p.grad.scale(factor);
        }
    }

    /// Total number of scalar parameters.
    pub fn size(&self) -> usize {
        self.entries.values().map(|p| p.value.len()).sum()
    }

    /// Adam with bias correction; clears gradients afterwards.
    pub fn adam_step(&mut self, cfg: &AdamConfig) -> Result<()> {
        if let Some((name, _)) = self.entries.iter().find(|(_, p)| !p.has_grad) {
            return Err(Error::MissingGradient(name.clone()));
        }
        self.step_count += 1;
        let t = self.step_count as f64;
        let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
        let c1 = T::lit(1.0 - cfg.beta1.powf(t));
        let c2 = T::lit(1.0 - cfg.beta2.powf(t));
        let lr = T::lit(cfg.lr);
        let eps = T::lit(cfg.eps);
        for p in self.entries.values_mut() {
            let Param {
                value,
                grad,
                adam_m,
                adam_v,
                ..
            } = p;
            for (((x, &g), m), v) in value
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(adam_m.data_mut())
                .zip(adam_v.data_mut())
            {
                *m = b1 * *m + (T::one() - b1) * g;
                *v = b2 * *v + (T::one() - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *x -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        self.zero_grads();
        Ok(())
    }
}

/// Free-function form of [`ParamStore::adam_step`].
pub fn adam_step<T: Scalar>(
    store: &mut ParamStore<T>,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) -> Result<()> {
    store.adam_step(&AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_store(x: f64) -> ParamStore<f64> {
        let mut s = ParamStore::new();
        s.insert("x", Tensor::from_vec(vec![x]));
        s
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut s = scalar_store(0.5);
        s.accumulate_grad("x", &Tensor::from_vec(vec![1.0])).unwrap();
        adam_step(&mut s, 1e-3, 0.9, 0.999, 1e-8).unwrap();
        // m_hat = 1, v_hat = 1 at t = 1: step = lr / (1 + eps)
        let moved = 0.5 - s.value("x").unwrap().data()[0];
        assert!((moved - 1e-3 / (1.0 + 1e-8)).abs() < 1e-15);
        assert!((moved - 9.99999e-4).abs() < 1e-9);
        assert_eq!(s.step_count(), 1);
        assert!(!s.param("x").unwrap().has_grad());
        assert_eq!(s.grad("x").unwrap().data()[0], 0.0);
    }

    #[test]
    fn zero_gradient_leaves_value() {
        let mut s = scalar_store(2.0);
        for _ in 0..5 {
            s.accumulate_grad("x", &Tensor::from_vec(vec![0.0])).unwrap();
            s.adam_step(&AdamConfig::default()).unwrap();
        }
        assert_eq!(s.value("x").unwrap().data()[0], 2.0);
        assert_eq!(s.step_count(), 5);
    }

    #[test]
    fn two_steps_match_scalar_oracle() {
        let (lr, b1, b2, eps, g) = (1e-2, 0.9, 0.999, 1e-8, 0.3);
        let mut s = scalar_store(1.0);
        let (mut x, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        for t in 1..=2 {
            s.accumulate_grad("x", &Tensor::from_vec(vec![g])).unwrap();
            adam_step(&mut s, lr, b1, b2, eps).unwrap();
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            x -= lr * mh / (vh.sqrt() + eps);
        }
        assert!((s.value("x").unwrap().data()[0] - x).abs() < 1e-12);
    }

    #[test]
    fn missing_gradient_is_named() {
        let mut s = scalar_store(1.0);
        s.insert("w", Tensor::zeros(&[2, 2]));
        s.accumulate_grad("x", &Tensor::from_vec(vec![1.0])).unwrap();
        match s.adam_step(&AdamConfig::default()) {
            Err(Error::MissingGradient(name)) => assert_eq!(name, "w"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(s.step_count(), 0);
    }

    #[test]
    fn zero_lr_is_bit_identical() {
        let mut s = ParamStore::<f64>::new();
        s.insert("w", Tensor::from_f64(&[2, 2], &[0.1, -0.3, 1e-9, 7.5]).unwrap());
        let before = s.value("w").unwrap().clone();
        s.accumulate_grad("w", &Tensor::from_f64(&[2, 2], &[1.0, -2.0, 3.0, 0.0]).unwrap())
            .unwrap();
        s.adam_step(&AdamConfig::with_lr(0.0)).unwrap();
        let after = s.value("w").unwrap();
        for (a, b) in before.data().iter().zip(after.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
