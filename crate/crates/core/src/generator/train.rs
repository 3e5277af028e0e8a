use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::codec::EncodedTracing;
use crate::error::{Error, Result};
use crate::generator::{Batch, GeneratorModel};
use crate::numerics::{stream_key, AdamConfig, Scalar, SeededRng};
use crate::styles::BiasVector;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub bias: BiasVector,
    pub tracing: EncodedTracing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    /// Rewritten after every epoch when set.
    pub checkpoint: Option<PathBuf>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 32,
            checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean over sequences of the summed per-step loss.
    pub train_loss: f64,
    pub train_loss_per_step: f64,
    pub val_loss: Option<f64>,
    pub val_loss_per_step: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed: u64,
    /// Training-set loss before the first update, without dropout.
    pub initial_loss: f64,
    pub initial_loss_per_step: f64,
    pub epochs: Vec<EpochStats>,
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epochs.last().map_or(self.initial_loss, |e| e.train_loss)
    }
}

/// Groups sequences of similar length to limit padding: shuffle, sort inside
/// windows of several batches, then shuffle the batch order.
fn plan_batches(lengths: &[usize], batch_size: usize, rng: &mut SeededRng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    rng.shuffle(&mut order);
    for window in order.chunks_mut(batch_size * 8) {
        window.sort_by_key(|&i| lengths[i]);
    }
    let mut batches: Vec<Vec<usize>> = order.chunks(batch_size).map(|c| c.to_vec()).collect();
    rng.shuffle(&mut batches);
    batches
}

impl<T: Scalar> GeneratorModel<T> {
    fn make_batch(&self, examples: &[TrainingExample], idx: &[usize]) -> Result<Batch<T>> {
        let items: Vec<(&[f64], &EncodedTracing)> = idx
            .iter()
            .map(|&i| (examples[i].bias.values.as_slice(), &examples[i].tracing))
            .collect();
        Batch::new(&items)
    }

    fn check_examples(&self, examples: &[TrainingExample]) -> Result<()> {
        for e in examples {
            if e.bias.kind != self.bias_kind {
                return Err(Error::BiasKind {
                    expected: self.bias_kind.to_string(),
                    actual: e.bias.kind.to_string(),
                });
            }
            self.check_bias(&e.bias)?;
        }
        Ok(())
    }

    /// Mean summed loss per sequence and per step, no dropout.
    pub fn evaluate_loss(&self, examples: &[TrainingExample], batch_size: usize) -> Result<(f64, f64)> {
        self.check_examples(examples)?;
        if examples.is_empty() {
            return Err(Error::InsufficientData("no examples to evaluate".into()));
        }
        let (mut total, mut steps) = (0.0, 0);
        let idx: Vec<usize> = (0..examples.len()).collect();
        for chunk in idx.chunks(batch_size.max(1)) {
            let l = self.batch_loss(&self.make_batch(examples, chunk)?)?;
            total += l.total;
            steps += l.steps;
        }
        Ok((total / examples.len() as f64, total / steps as f64))
    }

    /// Teacher-forced Adam training with dropout between recurrent layers.
    pub fn train(&mut self, train: &[TrainingExample], validation: &[TrainingExample], opts: &TrainOptions) -> Result<TrainReport> {
        if train.is_empty() {
            return Err(Error::InsufficientData("empty training set".into()));
        }
        if opts.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        self.check_examples(train)?;
        self.check_examples(validation)?;
        let start = Instant::now();
        let adam = AdamConfig::with_lr(self.config.lr);
        let root = SeededRng::new(self.config.seed);
        let lengths: Vec<usize> = train.iter().map(|e| e.tracing.len()).collect();
        let (initial_loss, initial_loss_per_step) = self.evaluate_loss(train, opts.batch_size)?;
        let first_epoch = self.params.step_count() as usize / train.len().div_ceil(opts.batch_size);
        let mut epochs = Vec::with_capacity(opts.epochs);

        for e in 0..opts.epochs {
            let epoch = first_epoch + e;
            let mut shuffle = root.fork(stream_key("shuffle")).fork(epoch as u64);
            let mut dropout = root.fork(stream_key("dropout")).fork(epoch as u64);
            let (mut total, mut steps) = (0.0, 0);
            for idx in plan_batches(&lengths, opts.batch_size, &mut shuffle) {
                let batch = self.make_batch(train, &idx)?;
                let loss = self.accumulate_gradients(&batch, Some(&mut dropout))?;
                total += loss.total;
                steps += loss.steps;
                self.params.scale_grads(T::lit(1.0 / idx.len() as f64));
                self.params.adam_step(&adam)?;
            }
            let (val_loss, val_loss_per_step) = if validation.is_empty() {
                (None, None)
            } else {
                let (a, b) = self.evaluate_loss(validation, opts.batch_size)?;
                (Some(a), Some(b))
            };
            let stats = EpochStats {
                epoch,
                train_loss: total / train.len() as f64,
                train_loss_per_step: total / steps as f64,
                val_loss,
                val_loss_per_step,
            };
            log::info!(
                "epoch {epoch}: train {:.4} ({:.4}/step) val {:?}",
                stats.train_loss,
                stats.train_loss_per_step,
                stats.val_loss
            );
            epochs.push(stats);
            if let Some(path) = &opts.checkpoint {
                self.save_checkpoint(path)?;
            }
        }
        Ok(TrainReport {
            seed: self.config.seed,
            initial_loss,
            initial_loss_per_step,
            epochs,
            wall_time_secs: start.elapsed().as_secs_f64(),
        })
    }
}
