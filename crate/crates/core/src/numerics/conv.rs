//! Image layers: valid 2-D convolution (stride 1), 2x2 max pooling and
//! per-channel batch normalization. Tensors are `[batch, channels, height, width]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Scalar, Tensor};

fn dims4(t: &Tensor<impl Scalar>, op: &'static str) -> Result<[usize; 4]> {
    match *t.shape() {
        [n, c, h, w] => Ok([n, c, h, w]),
        _ => Err(Error::shape(op, t.shape(), &[0, 0, 0, 0])),
    }
}

#[derive(Debug, Clone)]
pub struct ConvCache<T> {
    input_shape: [usize; 4],
    kernel_shape: [usize; 4],
    /// im2col matrices, one `[c*kh*kw, oh*ow]` block per image
    cols: Vec<T>,
}

fn im2col<T: Scalar>(img: &[T], [c, h, w]: [usize; 3], kh: usize, kw: usize, out: &mut [T]) {
    let (oh, ow) = (h - kh + 1, w - kw + 1);
    let p = oh * ow;
    for ci in 0..c {
        for ki in 0..kh {
            for kj in 0..kw {
                let row = (ci * kh + ki) * kw + kj;
                let dst = &mut out[row * p..(row + 1) * p];
                for oi in 0..oh {
                    let src = &img[ci * h * w + (oi + ki) * w + kj..][..ow];
                    dst[oi * ow..(oi + 1) * ow].copy_from_slice(src);
                }
            }
        }
    }
}

fn col2im_add<T: Scalar>(cols: &[T], [c, h, w]: [usize; 3], kh: usize, kw: usize, img: &mut [T]) {
    let (oh, ow) = (h - kh + 1, w - kw + 1);
    let p = oh * ow;
    for ci in 0..c {
        for ki in 0..kh {
            for kj in 0..kw {
                let row = (ci * kh + ki) * kw + kj;
                let src = &cols[row * p..(row + 1) * p];
                for oi in 0..oh {
                    let dst = &mut img[ci * h * w + (oi + ki) * w + kj..][..ow];
                    for (d, &s) in dst.iter_mut().zip(&src[oi * ow..(oi + 1) * ow]) {
                        *d += s;
                    }
                }
            }
        }
    }
}

/// `x: [n, c, h, w]`, `kernel: [f, c, kh, kw]`, `bias: [f]` → `[n, f, h-kh+1, w-kw+1]`.
pub fn conv2d_forward<T: Scalar>(
    x: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<(Tensor<T>, ConvCache<T>)> {
    let [n, c, h, w] = dims4(x, "conv2d input")?;
    let [f, kc, kh, kw] = dims4(kernel, "conv2d kernel")?;
    if kc != c || kh > h || kw > w {
        return Err(Error::shape("conv2d", x.shape(), kernel.shape()));
    }
    if bias.len() != f {
        return Err(Error::shape("conv2d bias", kernel.shape(), bias.shape()));
    }
    let (oh, ow) = (h - kh + 1, w - kw + 1);
    let (p, ckk) = (oh * ow, c * kh * kw);
    let mut cols = vec![T::zero(); n * ckk * p];
    let mut y = Tensor::zeros(&[n, f, oh, ow]);
    for ni in 0..n {
        let col = &mut cols[ni * ckk * p..(ni + 1) * ckk * p];
        im2col(&x.data()[ni * c * h * w..(ni + 1) * c * h * w], [c, h, w], kh, kw, col);
        let out = &mut y.data_mut()[ni * f * p..(ni + 1) * f * p];
        for (fi, chunk) in out.chunks_mut(p).enumerate() {
            chunk.fill(bias.data()[fi]);
        }
        T::gemm(f, ckk, p, T::one(), kernel.data(), ckk as isize, 1, col, p as isize, 1, T::one(), out, p as isize, 1);
    }
    let cache = ConvCache {
        input_shape: [n, c, h, w],
        kernel_shape: [f, c, kh, kw],
        cols,
    };
    Ok((y, cache))
}

/// Returns `(dx, dkernel, dbias)`.
pub fn conv2d_backward<T: Scalar>(
    cache: &ConvCache<T>,
    kernel: &Tensor<T>,
    dy: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let [n, c, h, w] = cache.input_shape;
    let [f, _, kh, kw] = cache.kernel_shape;
    let (oh, ow) = (h - kh + 1, w - kw + 1);
    let (p, ckk) = (oh * ow, c * kh * kw);
    if dy.shape() != [n, f, oh, ow] {
        return Err(Error::shape("conv2d backward", dy.shape(), &[n, f, oh, ow]));
    }
    let mut dk = Tensor::zeros(&cache.kernel_shape);
    let mut db = vec![T::zero(); f];
    let mut dx = Tensor::zeros(&cache.input_shape);
    let mut dcols = vec![T::zero(); ckk * p];
    for ni in 0..n {
        let g = &dy.data()[ni * f * p..(ni + 1) * f * p];
        let col = &cache.cols[ni * ckk * p..(ni + 1) * ckk * p];
        for (fi, chunk) in g.chunks(p).enumerate() {
            db[fi] += chunk.iter().copied().fold(T::zero(), |a, b| a + b);
        }
        // dK += dy_n · cols^T
        T::gemm(f, p, ckk, T::one(), g, p as isize, 1, col, 1, p as isize, T::one(), dk.data_mut(), ckk as isize, 1);
        // dcols = K^T · dy_n
        T::gemm(ckk, f, p, T::one(), kernel.data(), 1, ckk as isize, g, p as isize, 1, T::zero(), &mut dcols, p as isize, 1);
        col2im_add(&dcols, [c, h, w], kh, kw, &mut dx.data_mut()[ni * c * h * w..(ni + 1) * c * h * w]);
    }
    Ok((dx, dk, Tensor::from_vec(db)))
}

#[derive(Debug, Clone)]
pub struct PoolCache {
    input_shape: [usize; 4],
    argmax: Vec<usize>,
}

/// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
pub fn maxpool2x2_forward<T: Scalar>(x: &Tensor<T>) -> Result<(Tensor<T>, PoolCache)> {
    let [n, c, h, w] = dims4(x, "maxpool input")?;
    let (oh, ow) = (h / 2, w / 2);
    if oh == 0 || ow == 0 {
        return Err(Error::shape("maxpool", x.shape(), &[n, c, 2, 2]));
    }
    let mut y = Tensor::zeros(&[n, c, oh, ow]);
    let mut argmax = Vec::with_capacity(n * c * oh * ow);
    let src = x.data();
    let mut k = 0;
    for plane in 0..n * c {
        let base = plane * h * w;
        for i in 0..oh {
            for j in 0..ow {
                let mut best = base + 2 * i * w + 2 * j;
                for (di, dj) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = base + (2 * i + di) * w + 2 * j + dj;
                    if src[idx] > src[best] {
                        best = idx;
                    }
                }
                y.data_mut()[k] = src[best];
                argmax.push(best);
                k += 1;
            }
        }
    }
    Ok((
        y,
        PoolCache {
            input_shape: [n, c, h, w],
            argmax,
        },
    ))
}

pub fn maxpool2x2_backward<T: Scalar>(cache: &PoolCache, dy: &Tensor<T>) -> Result<Tensor<T>> {
    if dy.len() != cache.argmax.len() {
        return Err(Error::shape("maxpool backward", dy.shape(), &[cache.argmax.len()]));
    }
    let mut dx = Tensor::zeros(&cache.input_shape);
    for (&idx, &g) in cache.argmax.iter().zip(dy.data()) {
        dx.data_mut()[idx] += g;
    }
    Ok(dx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatchNormMode {
    Train,
    Infer,
}

/// Running statistics of one batch-normalization layer.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormStats<T> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
    pub momentum: f64,
    pub eps: f64,
}

impl<T: Scalar> BatchNormStats<T> {
    pub fn new(channels: usize) -> Self {
        Self {
            mean: vec![T::zero(); channels],
            var: vec![T::one(); channels],
            momentum: 0.9,
            eps: 1e-5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatchNormCache<T> {
    mode: BatchNormMode,
    shape: Vec<usize>,
    xhat: Vec<T>,
    inv_std: Vec<T>,
}

/// Per-channel normalization over every axis except 1. Accepts `[n, c]`
/// and `[n, c, h, w]` inputs.
pub fn batchnorm_forward<T: Scalar>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    stats: &mut BatchNormStats<T>,
    mode: BatchNormMode,
) -> Result<(Tensor<T>, BatchNormCache<T>)> {
    let shape = x.shape();
    if shape.len() < 2 {
        return Err(Error::shape("batchnorm", shape, &[0, 0]));
    }
    let (n, c) = (shape[0], shape[1]);
    let inner: usize = shape[2..].iter().product();
    if gamma.len() != c || beta.len() != c || stats.mean.len() != c {
        return Err(Error::shape("batchnorm scale", shape, gamma.shape()));
    }
    if mode == BatchNormMode::Train && n < 2 {
        return Err(Error::BatchTooSmall(n));
    }
    let count = (n * inner) as f64;
    let data = x.data();
    let mut mean = vec![T::zero(); c];
    let mut var = vec![T::zero(); c];
    match mode {
        BatchNormMode::Train => {
            for ni in 0..n {
                for ci in 0..c {
                    let lane = &data[(ni * c + ci) * inner..][..inner];
                    mean[ci] += lane.iter().copied().fold(T::zero(), |a, b| a + b);
                }
            }
            for m in &mut mean {
                *m /= T::lit(count);
            }
            for ni in 0..n {
                for ci in 0..c {
                    let lane = &data[(ni * c + ci) * inner..][..inner];
                    var[ci] += lane.iter().fold(T::zero(), |a, &v| a + (v - mean[ci]).powi(2));
                }
            }
            for v in &mut var {
                *v /= T::lit(count);
            }
            let mom = T::lit(stats.momentum);
            let unbias = T::lit(count / (count - 1.0));
            for ci in 0..c {
                stats.mean[ci] = mom * stats.mean[ci] + (T::one() - mom) * mean[ci];
                stats.var[ci] = mom * stats.var[ci] + (T::one() - mom) * var[ci] * unbias;
            }
        }
        BatchNormMode::Infer => {
            mean.copy_from_slice(&stats.mean);
            var.copy_from_slice(&stats.var);
        }
    }
    let eps = T::lit(stats.eps);
    let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
    let mut y = x.clone();
    let mut xhat = vec![T::zero(); x.len()];
    for ni in 0..n {
        for ci in 0..c {
            let off = (ni * c + ci) * inner;
            for k in off..off + inner {
                let xh = (data[k] - mean[ci]) * inv_std[ci];
                xhat[k] = xh;
                y.data_mut()[k] = gamma.data()[ci] * xh + beta.data()[ci];
            }
        }
    }
    let cache = BatchNormCache {
        mode,
        shape: shape.to_vec(),
        xhat,
        inv_std,
    };
    Ok((y, cache))
}

/// Returns `(dx, dgamma, dbeta)`.
pub fn batchnorm_backward<T: Scalar>(
    cache: &BatchNormCache<T>,
    gamma: &Tensor<T>,
    dy: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    if dy.shape() != cache.shape.as_slice() {
        return Err(Error::shape("batchnorm backward", dy.shape(), &cache.shape));
    }
    let (n, c) = (cache.shape[0], cache.shape[1]);
    let inner: usize = cache.shape[2..].iter().product();
    let m = T::lit((n * inner) as f64);
    let g = dy.data();
    let mut dgamma = vec![T::zero(); c];
    let mut dbeta = vec![T::zero(); c];
    for ni in 0..n {
        for ci in 0..c {
            let off = (ni * c + ci) * inner;
            for k in off..off + inner {
                dgamma[ci] += g[k] * cache.xhat[k];
                dbeta[ci] += g[k];
            }
        }
    }
    let mut dx = Tensor::zeros(&cache.shape);
    for ni in 0..n {
        for ci in 0..c {
            let off = (ni * c + ci) * inner;
            let scale = gamma.data()[ci] * cache.inv_std[ci];
            for k in off..off + inner {
                dx.data_mut()[k] = match cache.mode {
                    BatchNormMode::Infer => g[k] * scale,
                    BatchNormMode::Train => {
                        scale / m * (m * g[k] - dbeta[ci] - cache.xhat[k] * dgamma[ci])
                    }
                };
            }
        }
    }
    Ok((dx, Tensor::from_vec(dgamma), Tensor::from_vec(dbeta)))
}
