use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gemm_into, SeededRng, Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Tanh,
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            Activation::Linear => v,
            Activation::Tanh => v.tanh(),
            Activation::Relu => v.max(T::zero()),
            Activation::Sigmoid => sigmoid(v),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    pub fn derivative_from_output<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::Linear => T::one(),
            Activation::Tanh => T::one() - y * y,
            Activation::Relu => {
                if y > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Sigmoid => y * (T::one() - y),
        }
    }
}

#[inline]
pub fn sigmoid<T: Scalar>(v: T) -> T {
    if v >= T::zero() {
        T::one() / (T::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (T::one() + e)
    }
}

#[derive(Debug, Clone)]
pub struct DenseCache<T> {
    pub input: Tensor<T>,
    pub output: Tensor<T>,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseGrads<T> {
    pub input: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

/// `activation(x W + b)` for `x: [batch, in]`, `W: [in, out]`, `b: [out]`.
pub fn dense_forward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: &Tensor<T>,
    activation: Activation,
) -> Result<(Tensor<T>, DenseCache<T>)> {
    if w.shape().len() != 2 || x.cols() != w.shape()[0] {
        return Err(Error::shape("dense", x.shape(), w.shape()));
    }
    if b.len() != w.shape()[1] {
        return Err(Error::shape("dense bias", w.shape(), b.shape()));
    }
    let mut y = Tensor::zeros(&[x.rows(), w.shape()[1]]);
    gemm_into(&mut y, x, false, w, false, T::one(), T::zero())?;
    y.add_row_broadcast(b)?;
    if activation != Activation::Linear {
        for v in y.data_mut() {
            *v = activation.apply(*v);
        }
    }
    let cache = DenseCache {
        input: x.clone(),
        output: y.clone(),
        activation,
    };
    Ok((y, cache))
}

pub fn dense_backward<T: Scalar>(
    cache: &DenseCache<T>,
    w: &Tensor<T>,
    dy: &Tensor<T>,
) -> Result<DenseGrads<T>> {
    if dy.shape() != cache.output.shape() {
        return Err(Error::shape("dense backward", dy.shape(), cache.output.shape()));
    }
    let mut dz = dy.clone();
    if cache.activation != Activation::Linear {
        for (g, &y) in dz.data_mut().iter_mut().zip(cache.output.data()) {
            *g *= cache.activation.derivative_from_output(y);
        }
    }
    let mut dw = Tensor::zeros(w.shape());
    gemm_into(&mut dw, &cache.input, true, &dz, false, T::one(), T::zero())?;
    let mut dx = Tensor::zeros(cache.input.shape());
    gemm_into(&mut dx, &dz, false, w, true, T::one(), T::zero())?;
    Ok(DenseGrads {
        input: dx,
        weight: dw,
        bias: dz.sum_rows(),
    })
}

/// Inverted dropout mask: entries are 0 with probability `p`, else `1/(1-p)`.
pub fn dropout_mask<T: Scalar>(shape: &[usize], p: f64, rng: &mut SeededRng) -> Tensor<T> {
    let keep = T::lit(1.0 / (1.0 - p));
    let mut mask = Tensor::zeros(shape);
    for v in mask.data_mut() {
        if !rng.bernoulli(p) {
            *v = keep;
        }
    }
    mask
}
