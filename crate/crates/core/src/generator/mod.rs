//! Bias-conditioned autoregressive tracing generator.

mod batch;
mod checkpoint;
mod config;
mod model;
mod sample;
mod train;

pub use batch::Batch;
pub use checkpoint::CHECKPOINT_VERSION;
pub use config::GeneratorConfig;
pub use model::{sequence_loss, BatchLoss, GeneratorModel};
pub use sample::GREEDY_TEMPERATURE;
pub use train::{EpochStats, TrainOptions, TrainReport, TrainingExample};
