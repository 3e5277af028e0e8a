//! Gated recurrent unit with hand-written backpropagation through time.
//!
//! Gate order everywhere is update (z), reset (r), candidate (h):
//!
//! ```text
//! z  = sigmoid(x W_z + h U_z + b_z)
//! r  = sigmoid(x W_r + h U_r + b_r)
//! c  = tanh(x W_h + (r * h) U_h + b_h)
//! h' = (1 - z) * h + z * c
//! ```
//!
//! Sequences are processed time-major: row `t * batch + b` of every
//! `[steps * batch, width]` matrix belongs to step `t` of sequence `b`.
//! Input projections and all weight gradients are computed with one large
//! matrix product per gate; only the recurrent products run per step.

use crate::error::{Error, Result};
use crate::numerics::{dense::sigmoid, gemm_into, ParamStore, Scalar, SeededRng, Tensor};

pub const GATES: [&str; 3] = ["z", "r", "h"];

/// Borrowed GRU weights.
#[derive(Debug, Clone, Copy)]
pub struct GruView<'a, T> {
    pub w: [&'a Tensor<T>; 3],
    pub u: [&'a Tensor<T>; 3],
    pub b: [&'a Tensor<T>; 3],
}

/// Owned GRU weights, mostly for tests and standalone use.
#[derive(Debug, Clone)]
pub struct GruParams<T> {
    pub w: [Tensor<T>; 3],
    pub u: [Tensor<T>; 3],
    pub b: [Tensor<T>; 3],
}

impl<T: Scalar> GruParams<T> {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w: std::array::from_fn(|_| Tensor::zeros(&[input, hidden])),
            u: std::array::from_fn(|_| Tensor::zeros(&[hidden, hidden])),
            b: std::array::from_fn(|_| Tensor::zeros(&[hidden])),
        }
    }

    /// Uniform(-k, k) with `k = 1/sqrt(fan_in)` of each matrix.
    pub fn init(input: usize, hidden: usize, rng: &mut SeededRng) -> Self {
        let mut p = Self::zeros(input, hidden);
        let kw = 1.0 / (input as f64).sqrt();
        let ku = 1.0 / (hidden as f64).sqrt();
        for g in 0..3 {
            fill_uniform(&mut p.w[g], kw, rng);
            fill_uniform(&mut p.u[g], ku, rng);
            fill_uniform(&mut p.b[g], ku, rng);
        }
        p
    }

    pub fn view(&self) -> GruView<'_, T> {
        GruView {
            w: [&self.w[0], &self.w[1], &self.w[2]],
            u: [&self.u[0], &self.u[1], &self.u[2]],
            b: [&self.b[0], &self.b[1], &self.b[2]],
        }
    }
}

pub(crate) fn fill_uniform<T: Scalar>(t: &mut Tensor<T>, k: f64, rng: &mut SeededRng) {
    for v in t.data_mut() {
        *v = T::lit(rng.uniform(-k, k));
    }
}

/// Names of the nine parameter tensors of a GRU stored under `prefix`.
pub fn gru_param_names(prefix: &str) -> [[String; 3]; 3] {
    let mk = |kind: &str| GATES.map(|g| format!("{prefix}.{kind}_{g}"));
    [mk("w"), mk("u"), mk("b")]
}

pub fn register_gru<T: Scalar>(store: &mut ParamStore<T>, prefix: &str, params: GruParams<T>) {
    let [wn, un, bn] = gru_param_names(prefix);
    let GruParams { w, u, b } = params;
    for (names, tensors) in [(wn, w), (un, u), (bn, b)] {
        for (name, t) in names.into_iter().zip(tensors) {
            store.insert(&name, t);
        }
    }
}

pub fn gru_view<'a, T: Scalar>(store: &'a ParamStore<T>, prefix: &str) -> Result<GruView<'a, T>> {
    let [wn, un, bn] = gru_param_names(prefix);
    let get = |names: &[String; 3]| -> Result<[&'a Tensor<T>; 3]> {
        Ok([
            store.value(&names[0])?,
            store.value(&names[1])?,
            store.value(&names[2])?,
        ])
    };
    Ok(GruView {
        w: get(&wn)?,
        u: get(&un)?,
        b: get(&bn)?,
    })
}

#[derive(Debug, Clone)]
pub struct GruGrads<T> {
    pub w: [Tensor<T>; 3],
    pub u: [Tensor<T>; 3],
    pub b: [Tensor<T>; 3],
    /// Gradient with respect to the inputs, `[steps * batch, input]`.
    pub input: Tensor<T>,
    /// Gradient with respect to the initial hidden state, `[batch, hidden]`.
    pub h0: Tensor<T>,
}

impl<T: Scalar> GruGrads<T> {
    pub fn accumulate_into(&self, store: &mut ParamStore<T>, prefix: &str) -> Result<()> {
        let [wn, un, bn] = gru_param_names(prefix);
        for g in 0..3 {
            store.accumulate_grad(&wn[g], &self.w[g])?;
            store.accumulate_grad(&un[g], &self.u[g])?;
            store.accumulate_grad(&bn[g], &self.b[g])?;
        }
        Ok(())
    }
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct GruSeqCache<T> {
    steps: usize,
    batch: usize,
    hidden: usize,
    input: Tensor<T>,
    h_prev: Tensor<T>,
    reset_h: Tensor<T>,
    z: Vec<T>,
    r: Vec<T>,
    c: Vec<T>,
}

fn check_view<T: Scalar>(p: &GruView<'_, T>, input: usize) -> Result<usize> {
    let hidden = p.u[0].shape()[0];
    for g in 0..3 {
        if p.w[g].shape() != [input, hidden] {
            return Err(Error::shape("gru input weights", p.w[g].shape(), &[input, hidden]));
        }
        if p.u[g].shape() != [hidden, hidden] {
            return Err(Error::shape("gru recurrent weights", p.u[g].shape(), &[hidden, hidden]));
        }
        if p.b[g].len() != hidden {
            return Err(Error::shape("gru bias", p.b[g].shape(), &[hidden]));
        }
    }
    Ok(hidden)
}

/// Runs `steps` GRU steps over a time-major input block.
///
/// Returns every step's hidden state as `[steps * batch, hidden]`.
pub fn gru_forward_seq<T: Scalar>(
    p: &GruView<'_, T>,
    input: &Tensor<T>,
    h0: &Tensor<T>,
    steps: usize,
) -> Result<(Tensor<T>, GruSeqCache<T>)> {
    let batch = h0.rows();
    if input.rows() != steps * batch {
        return Err(Error::shape("gru sequence", input.shape(), &[steps * batch, input.cols()]));
    }
    let hidden = check_view(p, input.cols())?;
    if h0.cols() != hidden {
        return Err(Error::shape("gru state", h0.shape(), &[batch, hidden]));
    }
    let n = steps * batch;
    let mut proj: Vec<Tensor<T>> = Vec::with_capacity(3);
    for g in 0..3 {
        let mut a = Tensor::zeros(&[n, hidden]);
        gemm_into(&mut a, input, false, p.w[g], false, T::one(), T::zero())?;
        a.add_row_broadcast(p.b[g])?;
        proj.push(a);
    }

    let mut out = Tensor::zeros(&[n, hidden]);
    let mut h_prev = Tensor::zeros(&[n, hidden]);
    let mut reset_h = Tensor::zeros(&[n, hidden]);
    let mut z = vec![T::zero(); n * hidden];
    let mut r = vec![T::zero(); n * hidden];
    let mut c = vec![T::zero(); n * hidden];
    let bh = batch * hidden;
    let hs = hidden as isize;
    let mut h = h0.data().to_vec();

    for t in 0..steps {
        let span = t * bh..(t + 1) * bh;
        h_prev.data_mut()[span.clone()].copy_from_slice(&h);

        // pre-activations of z and r: input projection + h U
        let mut az = proj[0].data()[span.clone()].to_vec();
        let mut ar = proj[1].data()[span.clone()].to_vec();
        T::gemm(batch, hidden, hidden, T::one(), &h, hs, 1, p.u[0].data(), hs, 1, T::one(), &mut az, hs, 1);
        T::gemm(batch, hidden, hidden, T::one(), &h, hs, 1, p.u[1].data(), hs, 1, T::one(), &mut ar, hs, 1);
        for v in az.iter_mut().chain(ar.iter_mut()) {
            *v = sigmoid(*v);
        }
        let rh: Vec<T> = ar.iter().zip(&h).map(|(&ri, &hi)| ri * hi).collect();
        let mut ah = proj[2].data()[span.clone()].to_vec();
        T::gemm(batch, hidden, hidden, T::one(), &rh, hs, 1, p.u[2].data(), hs, 1, T::one(), &mut ah, hs, 1);
        for (i, a) in ah.iter_mut().enumerate() {
            *a = a.tanh();
            h[i] = (T::one() - az[i]) * h[i] + az[i] * *a;
        }
        out.data_mut()[span.clone()].copy_from_slice(&h);
        reset_h.data_mut()[span.clone()].copy_from_slice(&rh);
        z[span.clone()].copy_from_slice(&az);
        r[span.clone()].copy_from_slice(&ar);
        c[span].copy_from_slice(&ah);
    }

    let cache = GruSeqCache {
        steps,
        batch,
        hidden,
        input: input.clone(),
        h_prev,
        reset_h,
        z,
        r,
        c,
    };
    Ok((out, cache))
}

/// Backpropagation through time. `d_out` is the loss gradient on every
/// step's output hidden state (`[steps * batch, hidden]`).
pub fn gru_backward_seq<T: Scalar>(
    p: &GruView<'_, T>,
    cache: &GruSeqCache<T>,
    d_out: &Tensor<T>,
) -> Result<GruGrads<T>> {
    let (steps, batch, hidden) = (cache.steps, cache.batch, cache.hidden);
    let n = steps * batch;
    if d_out.shape() != [n, hidden] {
        return Err(Error::shape("gru backward", d_out.shape(), &[n, hidden]));
    }
    let bh = batch * hidden;
    let hs = hidden as isize;
    let mut da: [Tensor<T>; 3] = std::array::from_fn(|_| Tensor::zeros(&[n, hidden]));
    let mut dh = vec![T::zero(); bh];
    let mut drh = vec![T::zero(); bh];

    for t in (0..steps).rev() {
        let span = t * bh..(t + 1) * bh;
        for (g, &d) in dh.iter_mut().zip(&d_out.data()[span.clone()]) {
            *g += d;
        }
        let hp = &cache.h_prev.data()[span.clone()];
        let z = &cache.z[span.clone()];
        let r = &cache.r[span.clone()];
        let c = &cache.c[span.clone()];
        {
            let [daz, _, dah] = &mut da;
            let daz = &mut daz.data_mut()[span.clone()];
            let dah = &mut dah.data_mut()[span.clone()];
            for i in 0..bh {
                daz[i] = dh[i] * (c[i] - hp[i]) * z[i] * (T::one() - z[i]);
                dah[i] = dh[i] * z[i] * (T::one() - c[i] * c[i]);
            }
        }
        // d(r*h) = da_h U_h^T
        T::gemm(batch, hidden, hidden, T::one(), &da[2].data()[span.clone()], hs, 1, p.u[2].data(), 1, hs, T::zero(), &mut drh, hs, 1);
        {
            let dar = &mut da[1].data_mut()[span.clone()];
            for i in 0..bh {
                dar[i] = drh[i] * hp[i] * r[i] * (T::one() - r[i]);
            }
        }
        // gradient on the previous state
        for i in 0..bh {
            dh[i] = dh[i] * (T::one() - z[i]) + drh[i] * r[i];
        }
        for g in 0..2 {
            T::gemm(batch, hidden, hidden, T::one(), &da[g].data()[span.clone()], hs, 1, p.u[g].data(), 1, hs, T::one(), &mut dh, hs, 1);
        }
    }

    let input_dim = cache.input.cols();
    let mut dw: [Tensor<T>; 3] = std::array::from_fn(|_| Tensor::zeros(&[input_dim, hidden]));
    let mut du: [Tensor<T>; 3] = std::array::from_fn(|_| Tensor::zeros(&[hidden, hidden]));
    let mut dx = Tensor::zeros(&[n, input_dim]);
    for g in 0..3 {
        gemm_into(&mut dw[g], &cache.input, true, &da[g], false, T::one(), T::zero())?;
        let src = if g == 2 { &cache.reset_h } else { &cache.h_prev };
        gemm_into(&mut du[g], src, true, &da[g], false, T::one(), T::zero())?;
        gemm_into(&mut dx, &da[g], false, p.w[g], true, T::one(), T::one())?;
    }
    let db = [da[0].sum_rows(), da[1].sum_rows(), da[2].sum_rows()];
    Ok(GruGrads {
        w: dw,
        u: du,
        b: db,
        input: dx,
        h0: Tensor::new(vec![batch, hidden], dh)?,
    })
}

/// One GRU step: `x_t: [batch, input]`, `h_prev: [batch, hidden]`.
pub fn gru_cell_forward<T: Scalar>(
    p: &GruView<'_, T>,
    x_t: &Tensor<T>,
    h_prev: &Tensor<T>,
) -> Result<(Tensor<T>, GruSeqCache<T>)> {
    if x_t.rows() != h_prev.rows() {
        return Err(Error::shape("gru cell batch", x_t.shape(), h_prev.shape()));
    }
    gru_forward_seq(p, x_t, h_prev, 1)
}

/// Gradients of one step given `dh_t`; `input`/`h0` of the result are the
/// gradients on `x_t` and `h_prev`.
pub fn gru_cell_backward<T: Scalar>(
    p: &GruView<'_, T>,
    cache: &GruSeqCache<T>,
    dh_t: &Tensor<T>,
) -> Result<GruGrads<T>> {
    gru_backward_seq(p, cache, dh_t)
}

impl<T: Scalar> GruSeqCache<T> {
    /// Gate activations of the last step, `(z, r)`, for inspection.
    pub fn last_gates(&self) -> (&[T], &[T]) {
        let bh = self.batch * self.hidden;
        let s = (self.steps - 1) * bh;
        (&self.z[s..s + bh], &self.r[s..s + bh])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_halve_the_state() {
        let p = GruParams::<f64>::zeros(3, 4);
        let x = Tensor::from_f64(&[2, 3], &[1., 2., 3., -1., 0.5, 2.]).unwrap();
        let h = Tensor::from_f64(&[2, 4], &[1., -2., 0.5, 4., 3., 0., -1., 2.]).unwrap();
        let (h1, cache) = gru_cell_forward(&p.view(), &x, &h).unwrap();
        for (a, b) in h1.data().iter().zip(h.data()) {
            assert_eq!(*a, 0.5 * b);
        }
        let (z, r) = cache.last_gates();
        assert!(z.iter().chain(r).all(|&g| g == 0.5));
    }

    #[test]
    fn zero_state_zero_input_zero_bias_stays_zero() {
        let mut rng = SeededRng::new(1);
        let mut p = GruParams::<f64>::init(3, 5, &mut rng);
        for b in &mut p.b {
            b.fill(0.0);
        }
        let (h1, _) =
            gru_cell_forward(&p.view(), &Tensor::zeros(&[1, 3]), &Tensor::zeros(&[1, 5])).unwrap();
        assert!(h1.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gates_in_open_unit_interval() {
        let mut rng = SeededRng::new(2);
        let p = GruParams::<f64>::init(4, 6, &mut rng);
        let x = Tensor::from_f64(&[3, 4], &(0..12).map(|i| (i as f64 - 6.0) * 0.7).collect::<Vec<_>>())
            .unwrap();
        let (_, cache) = gru_cell_forward(&p.view(), &x, &Tensor::full(&[3, 6], 0.3)).unwrap();
        let (z, r) = cache.last_gates();
        assert!(z.iter().chain(r).all(|&g| g > 0.0 && g < 1.0));
    }

    #[test]
    fn batch_mismatch_is_rejected() {
        let p = GruParams::<f64>::zeros(3, 4);
        assert!(gru_cell_forward(&p.view(), &Tensor::zeros(&[2, 3]), &Tensor::zeros(&[3, 4])).is_err());
        assert!(gru_cell_forward(&p.view(), &Tensor::zeros(&[2, 5]), &Tensor::zeros(&[2, 4])).is_err());
    }

    #[test]
    fn sequence_equals_repeated_cells() {
        let mut rng = SeededRng::new(3);
        let p = GruParams::<f64>::init(3, 4, &mut rng);
        let (steps, batch) = (5, 2);
        let x: Vec<f64> = (0..steps * batch * 3).map(|_| rng.normal()).collect();
        let x = Tensor::from_f64(&[steps * batch, 3], &x).unwrap();
        let h0 = Tensor::from_f64(&[batch, 4], &[0.1, -0.2, 0.3, 0.0, 0.5, 0.5, -0.5, 0.2]).unwrap();
        let (all, _) = gru_forward_seq(&p.view(), &x, &h0, steps).unwrap();
        let mut h = h0;
        for t in 0..steps {
            let xt = Tensor::from_f64(&[batch, 3], &x.data()[t * batch * 3..(t + 1) * batch * 3]).unwrap();
            h = gru_cell_forward(&p.view(), &xt, &h).unwrap().0;
            assert_eq!(h.data(), &all.data()[t * batch * 4..(t + 1) * batch * 4]);
        }
    }
}
