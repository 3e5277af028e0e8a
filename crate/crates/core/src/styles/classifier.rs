//! Convolutional letter classifier whose penultimate dense layer is the style embedding.
//!
//! ```text
//! [n,1,28,28] conv3x3x16 → BN → relu → pool → conv3x3x32 → BN → relu → pool
//!             → flatten 800 → dense(embedding, relu) → dense(26) → softmax
//! ```

use serde::{Deserialize, Serialize};

use crate::dataset::{Raster, RASTER_SIDE};
use crate::error::{Error, Result};
use crate::numerics::conv::{BatchNormCache, ConvCache, PoolCache};
use crate::numerics::gru::fill_uniform;
use crate::numerics::{
    batchnorm_backward, batchnorm_forward, conv2d_backward, conv2d_forward, dense_backward, dense_forward,
    maxpool2x2_backward, maxpool2x2_forward, nll_from_logits, stream_key, Activation, AdamConfig, BatchNormMode,
    BatchNormStats, DenseCache, ParamStore, Scalar, SeededRng, Tensor,
};
use crate::styles::onehot::{index_letter, letter_index, LETTER_DIM};
use crate::styles::{BiasKind, BiasVector, Provenance};

const CHANNELS: [usize; 2] = [16, 32];
/// Spatial side after two valid 3x3 convolutions and two 2x2 pools.
const FINAL_SIDE: usize = ((RASTER_SIDE - 2) / 2 - 2) / 2;
const FLAT: usize = CHANNELS[1] * FINAL_SIDE * FINAL_SIDE;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub embedding_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 64,
            epochs: 8,
            batch_size: 32,
            lr: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub epoch_losses: Vec<f64>,
    pub train_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct LetterClassifier<T> {
    pub config: ClassifierConfig,
    pub params: ParamStore<T>,
    pub bn: [BatchNormStats<T>; 2],
    trained: bool,
}

struct Cache<T> {
    conv: [ConvCache<T>; 2],
    bn: [BatchNormCache<T>; 2],
    relu: [Tensor<T>; 2],
    pool: [PoolCache; 2],
    embed: DenseCache<T>,
    out: DenseCache<T>,
}

/// Stacks rasters into `[n, 1, 28, 28]`.
pub fn raster_batch<T: Scalar>(rasters: &[&Raster]) -> Result<Tensor<T>> {
    let data = rasters.iter().flat_map(|r| r.pixels().iter().map(|&v| T::lit(v))).collect();
    Tensor::new(vec![rasters.len(), 1, RASTER_SIDE, RASTER_SIDE], data)
}

fn pair<X>(v: Vec<X>) -> [X; 2] {
    v.try_into().map_err(|_| ()).expect("two conv blocks")
}

fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| v.max(T::zero()))
}

fn relu_backward<T: Scalar>(out: &Tensor<T>, dy: &Tensor<T>) -> Tensor<T> {
    let mut d = dy.clone();
    for (g, &y) in d.data_mut().iter_mut().zip(out.data()) {
        if y <= T::zero() {
            *g = T::zero();
        }
    }
    d
}

impl<T: Scalar> LetterClassifier<T> {
    pub fn new(config: ClassifierConfig) -> Result<Self> {
        if config.embedding_dim == 0 || config.batch_size < 2 {
            return Err(Error::Config("classifier needs embedding_dim > 0 and batch_size >= 2".into()));
        }
        let mut rng = SeededRng::new(config.seed).fork(stream_key("classifier"));
        let mut params = ParamStore::new();
        let mut uniform = |name: &str, shape: &[usize], fan_in: usize, rng: &mut SeededRng| {
            let mut t = Tensor::zeros(shape);
            fill_uniform(&mut t, 1.0 / (fan_in as f64).sqrt(), rng);
            params.insert(name, t);
        };
        uniform("conv1.k", &[CHANNELS[0], 1, 3, 3], 9, &mut rng);
        uniform("conv2.k", &[CHANNELS[1], CHANNELS[0], 3, 3], CHANNELS[0] * 9, &mut rng);
        let e = config.embedding_dim;
        uniform("embed.w", &[FLAT, e], FLAT, &mut rng);
        uniform("embed.b", &[e], FLAT, &mut rng);
        uniform("out.w", &[e, LETTER_DIM], e, &mut rng);
        uniform("out.b", &[LETTER_DIM], e, &mut rng);
        for (i, &c) in CHANNELS.iter().enumerate() {
            params.insert(&format!("bn{}.gamma", i + 1), Tensor::full(&[c], T::one()));
            params.insert(&format!("bn{}.beta", i + 1), Tensor::zeros(&[c]));
        }
        Ok(Self {
            config,
            params,
            bn: [BatchNormStats::new(CHANNELS[0]), BatchNormStats::new(CHANNELS[1])],
            trained: false,
        })
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    fn forward(&self, x: &Tensor<T>, bn: &mut [BatchNormStats<T>; 2], mode: BatchNormMode) -> Result<(Tensor<T>, Cache<T>)> {
        let p = &self.params;
        let n = x.shape()[0];
        let mut h = x.clone();
        let mut conv = Vec::new();
        let mut bnc = Vec::new();
        let mut relus = Vec::new();
        let mut pools = Vec::new();
        for (i, stats) in bn.iter_mut().enumerate() {
            let l = i + 1;
            let zero_bias = Tensor::zeros(&[CHANNELS[i]]);
            let (y, cc) = conv2d_forward(&h, p.value(&format!("conv{l}.k"))?, &zero_bias)?;
            let (y, bc) = batchnorm_forward(&y, p.value(&format!("bn{l}.gamma"))?, p.value(&format!("bn{l}.beta"))?, stats, mode)?;
            let r = relu(&y);
            let (y, pc) = maxpool2x2_forward(&r)?;
            conv.push(cc);
            bnc.push(bc);
            relus.push(r);
            pools.push(pc);
            h = y;
        }
        let flat = h.reshape(&[n, FLAT])?;
        let (emb, ec) = dense_forward(&flat, p.value("embed.w")?, p.value("embed.b")?, Activation::Relu)?;
        let (logits, oc) = dense_forward(&emb, p.value("out.w")?, p.value("out.b")?, Activation::Linear)?;
        Ok((
            logits,
            Cache {
                conv: pair(conv),
                bn: pair(bnc),
                relu: pair(relus),
                pool: pair(pools),
                embed: ec,
                out: oc,
            },
        ))
    }

    fn backward(&mut self, cache: &Cache<T>, dlogits: &Tensor<T>) -> Result<()> {
        let mut grads: Vec<(String, Tensor<T>)> = Vec::new();
        {
            let p = &self.params;
            let go = dense_backward(&cache.out, p.value("out.w")?, dlogits)?;
            let ge = dense_backward(&cache.embed, p.value("embed.w")?, &go.input)?;
            grads.push(("out.w".into(), go.weight));
            grads.push(("out.b".into(), go.bias));
            grads.push(("embed.w".into(), ge.weight));
            grads.push(("embed.b".into(), ge.bias));
            let n = dlogits.rows();
            let mut d = ge.input.reshape(&[n, CHANNELS[1], FINAL_SIDE, FINAL_SIDE])?;
            for i in (0..2).rev() {
                let l = i + 1;
                let dr = maxpool2x2_backward(&cache.pool[i], &d)?;
                let dz = relu_backward(&cache.relu[i], &dr);
                let (dbn, dgamma, dbeta) = batchnorm_backward(&cache.bn[i], p.value(&format!("bn{l}.gamma"))?, &dz)?;
                let (dx, dk, _) = conv2d_backward(&cache.conv[i], p.value(&format!("conv{l}.k"))?, &dbn)?;
                grads.push((format!("bn{l}.gamma"), dgamma));
                grads.push((format!("bn{l}.beta"), dbeta));
                grads.push((format!("conv{l}.k"), dk));
                d = dx;
            }
        }
        for (name, g) in grads {
            self.params.accumulate_grad(&name, &g)?;
        }
        Ok(())
    }

    fn objective(logits: &Tensor<T>, labels: &[usize]) -> Result<(T, Tensor<T>)> {
        let n = labels.len();
        let scale = T::lit(1.0 / n as f64);
        let mut total = T::zero();
        let mut d = Tensor::zeros(logits.shape());
        for (i, &y) in labels.iter().enumerate() {
            let (l, g) = nll_from_logits(logits.row(i), y)?;
            total += l;
            for (o, v) in d.data_mut()[i * LETTER_DIM..(i + 1) * LETTER_DIM].iter_mut().zip(g) {
                *o = v * scale;
            }
        }
        Ok((total * scale, d))
    }

    /// Mean NLL of `labels` (indices into A..Z) on `[n,1,28,28]` images.
    pub fn loss(&mut self, images: &Tensor<T>, labels: &[usize], mode: BatchNormMode) -> Result<T> {
        let mut bn = self.bn.clone();
        let (logits, _) = self.forward(images, &mut bn, mode)?;
        if mode == BatchNormMode::Train {
            self.bn = bn;
        }
        Ok(Self::objective(&logits, labels)?.0)
    }

    /// Training-mode loss; gradients are added to the parameter store.
    pub fn loss_and_gradients(&mut self, images: &Tensor<T>, labels: &[usize]) -> Result<T> {
        let mut bn = self.bn.clone();
        let (logits, cache) = self.forward(images, &mut bn, BatchNormMode::Train)?;
        self.bn = bn;
        let (loss, d) = Self::objective(&logits, labels)?;
        self.backward(&cache, &d)?;
        Ok(loss)
    }

    pub fn train(&mut self, rasters: &[&Raster], letters: &[char]) -> Result<ClassifierReport> {
        if rasters.len() != letters.len() {
            return Err(Error::shape("classifier training set", &[rasters.len()], &[letters.len()]));
        }
        if rasters.len() < 2 {
            return Err(Error::BatchTooSmall(rasters.len()));
        }
        let labels = letters.iter().map(|&c| letter_index(c)).collect::<Result<Vec<_>>>()?;
        let adam = AdamConfig::with_lr(self.config.lr);
        let root = SeededRng::new(self.config.seed).fork(stream_key("classifier-shuffle"));
        let mut epoch_losses = Vec::with_capacity(self.config.epochs);
        for epoch in 0..self.config.epochs {
            let mut order: Vec<usize> = (0..rasters.len()).collect();
            root.fork(epoch as u64).shuffle(&mut order);
            let (mut total, mut seen) = (0.0, 0);
            for chunk in order.chunks(self.config.batch_size) {
                if chunk.len() < 2 {
                    // batch normalization cannot train on a single image
                    continue;
                }
                let imgs: Vec<&Raster> = chunk.iter().map(|&i| rasters[i]).collect();
                let ys: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
                let loss = self.loss_and_gradients(&raster_batch(&imgs)?, &ys)?;
                if !loss.is_finite() {
                    return Err(Error::NonFinite("classifier loss".into()));
                }
                total += loss.as_f64() * chunk.len() as f64;
                seen += chunk.len();
                self.params.adam_step(&adam)?;
            }
            let mean = total / seen as f64;
            log::info!("classifier epoch {epoch}: loss {mean:.4}");
            epoch_losses.push(mean);
        }
        self.trained = true;
        let train_accuracy = self.accuracy(rasters, letters)?;
        Ok(ClassifierReport {
            epoch_losses,
            train_accuracy,
        })
    }

    fn infer(&self, rasters: &[&Raster]) -> Result<(Tensor<T>, Tensor<T>)> {
        let mut bn = self.bn.clone();
        let (logits, cache) = self.forward(&raster_batch(rasters)?, &mut bn, BatchNormMode::Infer)?;
        Ok((logits, cache.embed.output))
    }

    pub fn predict(&self, rasters: &[&Raster]) -> Result<Vec<char>> {
        let mut out = Vec::with_capacity(rasters.len());
        for chunk in rasters.chunks(256) {
            let (logits, _) = self.infer(chunk)?;
            for i in 0..chunk.len() {
                let row = logits.row(i);
                let best = (0..LETTER_DIM).fold(0, |b, k| if row[k] > row[b] { k } else { b });
                out.push(index_letter(best).expect("class index"));
            }
        }
        Ok(out)
    }

    pub fn accuracy(&self, rasters: &[&Raster], letters: &[char]) -> Result<f64> {
        if rasters.is_empty() || rasters.len() != letters.len() {
            return Err(Error::shape("classifier accuracy", &[rasters.len()], &[letters.len()]));
        }
        let pred = self.predict(rasters)?;
        Ok(pred.iter().zip(letters).filter(|(a, b)| a == b).count() as f64 / letters.len() as f64)
    }

    /// Row = true letter, column = predicted letter, over A..Z.
    pub fn confusion(&self, rasters: &[&Raster], letters: &[char]) -> Result<Vec<Vec<usize>>> {
        let mut m = vec![vec![0; LETTER_DIM]; LETTER_DIM];
        for (p, &t) in self.predict(rasters)?.iter().zip(letters) {
            m[letter_index(t)?][letter_index(*p)?] += 1;
        }
        Ok(m)
    }

    /// Embedding-layer activations with frozen batch statistics.
    pub fn embedding(&self, raster: &Raster) -> Result<Vec<f64>> {
        if !self.trained {
            return Err(Error::Untrained("letter classifier"));
        }
        let (_, emb) = self.infer(&[raster])?;
        Ok(emb.data().iter().map(|v| v.as_f64()).collect())
    }

    pub fn classifier_embedding(&self, raster: &Raster, provenance: Provenance) -> Result<BiasVector> {
        BiasVector::new(BiasKind::ClassifierEmbedding, self.embedding(raster)?, provenance)
    }
}
