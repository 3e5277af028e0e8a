//! End-to-end stages over a run directory: corpus, preprocessing, bias
//! tables, generator training, sampling, evaluation and plots.
//!
//! Each stage writes its files under `out_dir` together with a
//! `<name>.provenance.json` recording the resolved config, tool version and
//! sha256 digests of inputs and outputs. Later stages refuse inputs whose
//! provenance is missing, stale or from another seed.

mod config;
mod files;
mod steps;
pub mod svg;

pub use config::{derive_seed, CodecSection, CorpusSection, EvalSection, ModelSection, RunConfig, StylesSection};
pub use files::{
    file_digest, read_jsonl, sha256_hex, verify_stage, EncodedRecord, GeneratedRecord, RunProvenance, StageOutput,
    TOOL_VERSION,
};
pub use steps::{
    evaluate, generate, load_dataset, plot, preprocess, run, score, synth, train_generator, train_styles, Dataset,
    PreprocessSummary, StylesSummary,
};
