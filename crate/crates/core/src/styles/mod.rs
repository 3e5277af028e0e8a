//! Bias vectors: letter and letter+writer one-hots, and image-derived embeddings.

mod autoencoder;
mod bias;
mod classifier;
mod onehot;
mod table;

pub use autoencoder::{Autoencoder, AutoencoderConfig};
pub use bias::{BiasKind, BiasVector, Provenance};
pub use classifier::{raster_batch, ClassifierConfig, ClassifierReport, LetterClassifier};
pub use onehot::{index_letter, letter_bias, letter_index, letter_writer_bias, WriterRegistry, LETTER_DIM};
pub use table::{build_embedding_table, letter_writer_key, EmbeddingTable, StyleModels};
