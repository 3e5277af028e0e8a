//! Handwriting tracing generation conditioned on letter and writer style.
//!
//! Pen trajectories are encoded as direction/speed chain codes, modeled by a
//! bias-conditioned recurrent generator and scored with clipped n-gram BLEU
//! and end-of-sequence length statistics.

pub mod codec;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod generator;
pub mod numerics;
pub mod pipeline;
pub mod styles;

pub use error::{Error, Result};

/// Default floating-point type of the model code.
pub type Real = f64;
pub type Tensor = numerics::Tensor<Real>;
pub type Generator = generator::GeneratorModel<Real>;
pub type Classifier = styles::LetterClassifier<Real>;
pub type ImageAutoencoder = styles::Autoencoder<Real>;
