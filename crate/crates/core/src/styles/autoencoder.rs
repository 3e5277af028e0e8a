//! Dense image autoencoder: 784 → hidden → latent → hidden → 784 (sigmoid), MSE loss.

use serde::{Deserialize, Serialize};

use crate::dataset::{Raster, RASTER_SIDE};
use crate::error::{Error, Result};
use crate::numerics::gru::fill_uniform;
use crate::numerics::{
    dense_backward, dense_forward, stream_key, Activation, AdamConfig, DenseCache, ParamStore, Scalar, SeededRng,
    Tensor,
};
use crate::styles::{BiasKind, BiasVector, Provenance};

const PIXELS: usize = RASTER_SIDE * RASTER_SIDE;
const LAYERS: [(&str, Activation); 4] = [
    ("enc1", Activation::Tanh),
    ("enc2", Activation::Linear),
    ("dec1", Activation::Tanh),
    ("dec2", Activation::Sigmoid),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutoencoderConfig {
    pub hidden: usize,
    pub latent: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        Self {
            hidden: 256,
            latent: 34,
            epochs: 15,
            batch_size: 32,
            lr: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Autoencoder<T> {
    pub config: AutoencoderConfig,
    pub params: ParamStore<T>,
    trained: bool,
}

fn flat_batch<T: Scalar>(rasters: &[&Raster]) -> Result<Tensor<T>> {
    let data = rasters.iter().flat_map(|r| r.pixels().iter().map(|&v| T::lit(v))).collect();
    Tensor::new(vec![rasters.len(), PIXELS], data)
}

impl<T: Scalar> Autoencoder<T> {
    pub fn new(config: AutoencoderConfig) -> Result<Self> {
        if config.hidden == 0 || config.latent == 0 || config.batch_size == 0 {
            return Err(Error::Config("autoencoder sizes must be positive".into()));
        }
        let mut rng = SeededRng::new(config.seed).fork(stream_key("autoencoder"));
        let dims = [PIXELS, config.hidden, config.latent, config.hidden, PIXELS];
        let mut params = ParamStore::new();
        for (i, (name, _)) in LAYERS.iter().enumerate() {
            let k = 1.0 / (dims[i] as f64).sqrt();
            let mut w = Tensor::zeros(&[dims[i], dims[i + 1]]);
            let mut b = Tensor::zeros(&[dims[i + 1]]);
            fill_uniform(&mut w, k, &mut rng);
            fill_uniform(&mut b, k, &mut rng);
            params.insert(&format!("{name}.w"), w);
            params.insert(&format!("{name}.b"), b);
        }
        Ok(Self {
            config,
            params,
            trained: false,
        })
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    fn forward(&self, x: &Tensor<T>, upto: usize) -> Result<(Tensor<T>, Vec<DenseCache<T>>)> {
        let mut h = x.clone();
        let mut caches = Vec::with_capacity(upto);
        for (name, act) in &LAYERS[..upto] {
            let (y, c) = dense_forward(&h, self.params.value(&format!("{name}.w"))?, self.params.value(&format!("{name}.b"))?, *act)?;
            caches.push(c);
            h = y;
        }
        Ok((h, caches))
    }

    /// Mean squared reconstruction error over all pixels of `x: [n, 784]`.
    pub fn loss(&self, x: &Tensor<T>) -> Result<T> {
        let (y, _) = self.forward(x, LAYERS.len())?;
        let n = T::lit(x.len() as f64);
        Ok(y.data().iter().zip(x.data()).fold(T::zero(), |a, (&p, &q)| a + (p - q) * (p - q)) / n)
    }

    pub fn loss_and_gradients(&mut self, x: &Tensor<T>) -> Result<T> {
        let (y, caches) = self.forward(x, LAYERS.len())?;
        let n = T::lit(x.len() as f64);
        let mut d = y.clone();
        let mut loss = T::zero();
        for (g, &q) in d.data_mut().iter_mut().zip(x.data()) {
            let e = *g - q;
            loss += e * e;
            *g = T::lit(2.0) * e / n;
        }
        let mut grads = Vec::new();
        for (i, (name, _)) in LAYERS.iter().enumerate().rev() {
            let g = dense_backward(&caches[i], self.params.value(&format!("{name}.w"))?, &d)?;
            grads.push((format!("{name}.w"), g.weight));
            grads.push((format!("{name}.b"), g.bias));
            d = g.input;
        }
        for (name, g) in grads {
            self.params.accumulate_grad(&name, &g)?;
        }
        Ok(loss / n)
    }

    /// Returns the mean loss of every epoch.
    pub fn train(&mut self, rasters: &[&Raster]) -> Result<Vec<f64>> {
        if rasters.is_empty() {
            return Err(Error::InsufficientData("no images for the autoencoder".into()));
        }
        let adam = AdamConfig::with_lr(self.config.lr);
        let root = SeededRng::new(self.config.seed).fork(stream_key("autoencoder-shuffle"));
        let mut losses = Vec::with_capacity(self.config.epochs);
        for epoch in 0..self.config.epochs {
            let mut order: Vec<usize> = (0..rasters.len()).collect();
            root.fork(epoch as u64).shuffle(&mut order);
            let mut total = 0.0;
            for chunk in order.chunks(self.config.batch_size) {
                let imgs: Vec<&Raster> = chunk.iter().map(|&i| rasters[i]).collect();
                let l = self.loss_and_gradients(&flat_batch(&imgs)?)?;
                if !l.is_finite() {
                    return Err(Error::NonFinite("autoencoder loss".into()));
                }
                total += l.as_f64() * chunk.len() as f64;
                self.params.adam_step(&adam)?;
            }
            let mean = total / rasters.len() as f64;
            log::info!("autoencoder epoch {epoch}: mse {mean:.5}");
            losses.push(mean);
        }
        self.trained = true;
        Ok(losses)
    }

    pub fn reconstruction_error(&self, rasters: &[&Raster]) -> Result<f64> {
        Ok(self.loss(&flat_batch(rasters)?)?.as_f64())
    }

    pub fn latent(&self, raster: &Raster) -> Result<Vec<f64>> {
        if !self.trained {
            return Err(Error::Untrained("autoencoder"));
        }
        let (z, _) = self.forward(&flat_batch(&[raster])?, 2)?;
        Ok(z.data().iter().map(|v| v.as_f64()).collect())
    }

    pub fn autoencoder_latent(&self, raster: &Raster, provenance: Provenance) -> Result<BiasVector> {
        BiasVector::new(BiasKind::AutoencoderLatent, self.latent(raster)?, provenance)
    }
}
