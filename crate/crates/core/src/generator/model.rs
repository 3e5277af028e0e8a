use crate::codec::{EncodedTracing, QuantizerSpec, CLASSES, FRAME_DIM};
use crate::error::{Error, Result};
use crate::generator::{Batch, GeneratorConfig};
use crate::numerics::gru::{fill_uniform, gru_view, register_gru, GruSeqCache};
use crate::numerics::{
    dense_backward, dense_forward, dropout_mask, gru_backward_seq, gru_forward_seq, nll_from_logits, stream_key,
    Activation, DenseCache, GruParams, ParamStore, Scalar, SeededRng, Tensor,
};
use crate::styles::{BiasKind, BiasVector};

/// Bias projection, stacked GRU and a dual-softmax head over one parameter store.
#[derive(Debug, Clone)]
pub struct GeneratorModel<T> {
    pub config: GeneratorConfig,
    pub bias_kind: BiasKind,
    pub bias_dim: usize,
    pub quantizer: QuantizerSpec,
    /// Seed of the corpus the model was trained on.
    pub corpus_seed: u64,
    pub params: ParamStore<T>,
}

pub(crate) struct ForwardCache<T> {
    mlp: [DenseCache<T>; 2],
    layers: Vec<GruSeqCache<T>>,
    /// Dropout mask applied to the input of layer `l + 1`.
    dropout: Vec<Option<Tensor<T>>>,
    head: DenseCache<T>,
}

/// Sum of per-step losses over unmasked rows, and the number of such rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchLoss {
    pub total: f64,
    pub steps: usize,
    pub sequences: usize,
}

pub(crate) fn gru_prefix(layer: usize) -> String {
    format!("gru{layer}")
}

impl<T: Scalar> GeneratorModel<T> {
    pub fn new(config: GeneratorConfig, bias_kind: BiasKind, bias_dim: usize, quantizer: QuantizerSpec) -> Result<Self> {
        config.validate()?;
        if bias_dim == 0 {
            return Err(Error::Config("bias dimension must be positive".into()));
        }
        let mut rng = SeededRng::new(config.seed).fork(stream_key("init"));
        let mut params = ParamStore::new();
        let mut dense = |name: &str, fan_in: usize, shape: &[usize], rng: &mut SeededRng| {
            let mut t = Tensor::zeros(shape);
            fill_uniform(&mut t, 1.0 / (fan_in as f64).sqrt(), rng);
            params.insert(name, t);
        };
        let (bh, h) = (config.bias_hidden, config.hidden_size);
        dense("bias.w1", bias_dim, &[bias_dim, bh], &mut rng);
        dense("bias.b1", bias_dim, &[bh], &mut rng);
        dense("bias.w2", bh, &[bh, FRAME_DIM], &mut rng);
        dense("bias.b2", bh, &[FRAME_DIM], &mut rng);
        dense("head.w", h, &[h, FRAME_DIM], &mut rng);
        dense("head.b", h, &[FRAME_DIM], &mut rng);
        for l in 0..config.hidden_layers {
            let input = if l == 0 { FRAME_DIM } else { h };
            register_gru(&mut params, &gru_prefix(l), GruParams::init(input, h, &mut rng));
        }
        Ok(Self {
            config,
            bias_kind,
            bias_dim,
            quantizer,
            corpus_seed: 0,
            params,
        })
    }

    pub fn check_bias(&self, bias: &BiasVector) -> Result<()> {
        if bias.dim() != self.bias_dim {
            return Err(Error::BiasDimension {
                expected: self.bias_dim,
                actual: bias.dim(),
            });
        }
        Ok(())
    }

    fn project(&self, bias: &Tensor<T>) -> Result<([DenseCache<T>; 2], Tensor<T>)> {
        let p = &self.params;
        let (h, c1) = dense_forward(bias, p.value("bias.w1")?, p.value("bias.b1")?, Activation::Tanh)?;
        let (f0, c2) = dense_forward(&h, p.value("bias.w2")?, p.value("bias.b2")?, Activation::Linear)?;
        Ok(([c1, c2], f0))
    }

    /// Frame 0: the bias vector mapped to a dense 34-dim input.
    pub fn bias_project(&self, bias: &BiasVector) -> Result<Vec<T>> {
        self.check_bias(bias)?;
        let x = Tensor::new(vec![1, self.bias_dim], bias.values.iter().map(|&v| T::lit(v)).collect())?;
        Ok(self.project(&x)?.1.into_data())
    }

    pub(crate) fn forward_batch(
        &self,
        batch: &Batch<T>,
        mut dropout: Option<&mut SeededRng>,
    ) -> Result<(Tensor<T>, ForwardCache<T>)> {
        if batch.bias.cols() != self.bias_dim {
            return Err(Error::BiasDimension {
                expected: self.bias_dim,
                actual: batch.bias.cols(),
            });
        }
        let (mlp, frame0) = self.project(&batch.bias)?;
        let mut x = batch.inputs.clone();
        x.data_mut()[..batch.batch * FRAME_DIM].copy_from_slice(frame0.data());

        let h = self.config.hidden_size;
        let h0 = Tensor::zeros(&[batch.batch, h]);
        let mut layers = Vec::with_capacity(self.config.hidden_layers);
        let mut masks = Vec::with_capacity(self.config.hidden_layers);
        for l in 0..self.config.hidden_layers {
            if l > 0 {
                let mask = match dropout.as_deref_mut() {
                    Some(rng) if self.config.dropout > 0.0 => {
                        let m = dropout_mask::<T>(x.shape(), self.config.dropout, rng);
                        for (v, &k) in x.data_mut().iter_mut().zip(m.data()) {
                            *v *= k;
                        }
                        Some(m)
                    }
                    _ => None,
                };
                masks.push(mask);
            }
            let view = gru_view(&self.params, &gru_prefix(l))?;
            let (out, cache) = gru_forward_seq(&view, &x, &h0, batch.steps)?;
            layers.push(cache);
            x = out;
        }
        let (logits, head) = dense_forward(&x, self.params.value("head.w")?, self.params.value("head.b")?, Activation::Linear)?;
        Ok((
            logits,
            ForwardCache {
                mlp,
                layers,
                dropout: masks,
                head,
            },
        ))
    }

    /// Accumulates parameter gradients of the loss whose logit gradient is `dlogits`.
    pub(crate) fn backward_batch(&mut self, cache: &ForwardCache<T>, dlogits: &Tensor<T>, batch: usize) -> Result<()> {
        let mut grads: Vec<(String, Tensor<T>)> = Vec::new();
        {
            let p = &self.params;
            let head = dense_backward(&cache.head, p.value("head.w")?, dlogits)?;
            grads.push(("head.w".into(), head.weight));
            grads.push(("head.b".into(), head.bias));
            let mut d = head.input;
            for l in (0..self.config.hidden_layers).rev() {
                let prefix = gru_prefix(l);
                let view = gru_view(p, &prefix)?;
                let g = gru_backward_seq(&view, &cache.layers[l], &d)?;
                let names = crate::numerics::gru::gru_param_names(&prefix);
                for k in 0..3 {
                    grads.push((names[0][k].clone(), g.w[k].clone()));
                    grads.push((names[1][k].clone(), g.u[k].clone()));
                    grads.push((names[2][k].clone(), g.b[k].clone()));
                }
                d = g.input;
                if l > 0 {
                    if let Some(m) = &cache.dropout[l - 1] {
                        for (v, &k) in d.data_mut().iter_mut().zip(m.data()) {
                            *v *= k;
                        }
                    }
                }
            }
            let d0 = Tensor::new(vec![batch, FRAME_DIM], d.data()[..batch * FRAME_DIM].to_vec())?;
            let g2 = dense_backward(&cache.mlp[1], p.value("bias.w2")?, &d0)?;
            let g1 = dense_backward(&cache.mlp[0], p.value("bias.w1")?, &g2.input)?;
            grads.push(("bias.w2".into(), g2.weight));
            grads.push(("bias.b2".into(), g2.bias));
            grads.push(("bias.w1".into(), g1.weight));
            grads.push(("bias.b1".into(), g1.bias));
        }
        for (name, g) in grads {
            self.params.accumulate_grad(&name, &g)?;
        }
        Ok(())
    }

    /// Summed masked loss of a batch and its gradient on the logits.
    pub(crate) fn batch_objective(logits: &Tensor<T>, batch: &Batch<T>) -> Result<(BatchLoss, Tensor<T>)> {
        let mut dlogits = Tensor::zeros(logits.shape());
        let mut total = 0.0;
        for (row, (&(dir, spd), &on)) in batch.targets.iter().zip(&batch.mask).enumerate() {
            if !on {
                continue;
            }
            let lane = logits.row(row);
            let (ld, gd) = nll_from_logits(&lane[..CLASSES], dir as usize)?;
            let (ls, gs) = nll_from_logits(&lane[CLASSES..], spd as usize)?;
            total += (ld + ls).as_f64();
            let out = &mut dlogits.data_mut()[row * FRAME_DIM..(row + 1) * FRAME_DIM];
            out[..CLASSES].copy_from_slice(&gd);
            out[CLASSES..].copy_from_slice(&gs);
        }
        if !total.is_finite() {
            return Err(Error::NonFinite("training loss".into()));
        }
        Ok((
            BatchLoss {
                total,
                steps: batch.active_steps(),
                sequences: batch.batch,
            },
            dlogits,
        ))
    }

    /// Forward and backward over a batch; gradients of the summed loss are
    /// added to the store. `dropout` enables dropout with that stream.
    pub fn accumulate_gradients(&mut self, batch: &Batch<T>, dropout: Option<&mut SeededRng>) -> Result<BatchLoss> {
        let (logits, cache) = self.forward_batch(batch, dropout)?;
        let (loss, dlogits) = Self::batch_objective(&logits, batch)?;
        self.backward_batch(&cache, &dlogits, batch.batch)?;
        Ok(loss)
    }

    /// Summed masked loss without dropout or gradients.
    pub fn batch_loss(&self, batch: &Batch<T>) -> Result<BatchLoss> {
        let (logits, _) = self.forward_batch(batch, None)?;
        Ok(Self::batch_objective(&logits, batch)?.0)
    }

    /// Teacher-forced logits `[frames.len(), 34]`: row `t` predicts frame `t`.
    pub fn forward_teacher_forced(&self, bias: &BiasVector, frames: &EncodedTracing) -> Result<Tensor<T>> {
        self.check_bias(bias)?;
        let batch = Batch::new(&[(&bias.values, frames)])?;
        Ok(self.forward_batch(&batch, None)?.0)
    }

    pub fn parameter_count(&self) -> usize {
        self.params.size()
    }
}

/// Summed direction + speed negative log likelihood of `frames` under `logits`.
pub fn sequence_loss<T: Scalar>(logits: &Tensor<T>, frames: &EncodedTracing) -> Result<T> {
    if logits.shape().len() != 2 || logits.rows() != frames.len() || logits.cols() != FRAME_DIM {
        return Err(Error::shape("sequence loss", logits.shape(), &[frames.len(), FRAME_DIM]));
    }
    let mut total = T::zero();
    for (t, f) in frames.frames().iter().enumerate() {
        let lane = logits.row(t);
        total += nll_from_logits(&lane[..CLASSES], f.direction as usize)?.0;
        total += nll_from_logits(&lane[CLASSES..], f.speed as usize)?.0;
    }
    Ok(total)
}
