//! Letter tracing corpora: ingestion, filtering, synthesis, rasterization and splits.

mod archetypes;
mod clean;
mod jsonl;
mod raster;
mod sample;
mod split;
mod synth;

pub use archetypes::{skeleton, strokes};
pub use clean::{clean, CleanConfig, CleanReport};
pub use jsonl::{load_jsonl, parse_jsonl, write_jsonl, LoadReport, Rejection, SampleRecord};
pub use raster::{rasterize, Raster, RASTER_MARGIN, RASTER_SIDE};
pub use sample::{LetterSample, Split};
pub use split::{select, split, StratifyBy};
pub use synth::{synth_corpus, synth_letter, writer_name, Corner, CorpusManifest, SynthConfig, SynthStyle};
