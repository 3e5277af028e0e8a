use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codec::MAX_STEPS;
use crate::dataset::{CleanConfig, Split, StratifyBy, SynthConfig};
use crate::error::{Error, Result};
use crate::eval::BrevityMode;
use crate::generator::{GeneratorConfig, TrainOptions};
use crate::numerics::{stream_key, SeededRng};
use crate::styles::{AutoencoderConfig, BiasKind, ClassifierConfig};

/// Everything a run needs. Seeds of the individual stages are derived from
/// `seed`, so the resolved file alone reproduces a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub corpus: CorpusSection,
    pub codec: CodecSection,
    pub model: ModelSection,
    pub styles: StylesSection,
    pub eval: EvalSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    /// JSONL file to ingest instead of synthesizing a corpus.
    pub input: Option<PathBuf>,
    pub alphabet: String,
    pub n_writers: usize,
    pub reps_per_writer: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodecSection {
    pub max_steps: usize,
    pub max_duration: f64,
    /// Train, validation and test fractions.
    pub split: [f64; 3],
    pub stratify_by: StratifyBy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub hidden_layers: usize,
    pub hidden_size: usize,
    pub dropout: f64,
    pub lr: f64,
    pub bias_hidden: usize,
    pub max_gen_len: usize,
    pub epochs: usize,
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StylesSection {
    pub kinds: Vec<BiasKind>,
    /// Embedding table used by the `external` kind.
    pub external: Option<PathBuf>,
    pub classifier: ClassifierConfig,
    pub autoencoder: AutoencoderConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Sampling temperature of generation.
    pub temperature: f64,
    /// Generated tracings per reference.
    pub count: usize,
    /// Split whose samples are the references.
    pub split: Split,
    pub brevity: BrevityMode,
    /// Tracings drawn in each per-letter plot.
    pub plot_per_letter: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out_dir: PathBuf::from("runs/default"),
            corpus: CorpusSection::default(),
            codec: CodecSection::default(),
            model: ModelSection::default(),
            styles: StylesSection::default(),
            eval: EvalSection::default(),
        }
    }
}

impl Default for CorpusSection {
    fn default() -> Self {
        let s = SynthConfig::default();
        Self {
            input: None,
            alphabet: s.alphabet,
            n_writers: s.n_writers,
            reps_per_writer: s.reps_per_writer,
        }
    }
}

impl Default for CodecSection {
    fn default() -> Self {
        Self {
            max_steps: MAX_STEPS,
            max_duration: 1.0,
            split: [0.8, 0.1, 0.1],
            stratify_by: StratifyBy::Letter,
        }
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            hidden_layers: 2,
            hidden_size: 128,
            dropout: 0.3,
            lr: 1e-3,
            bias_hidden: 64,
            max_gen_len: MAX_STEPS,
            epochs: 30,
            batch_size: 32,
        }
    }
}

impl Default for StylesSection {
    fn default() -> Self {
        Self {
            kinds: vec![
                BiasKind::Letter,
                BiasKind::LetterWriter,
                BiasKind::ClassifierEmbedding,
                BiasKind::AutoencoderLatent,
            ],
            external: None,
            classifier: ClassifierConfig::default(),
            autoencoder: AutoencoderConfig::default(),
        }
    }
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            temperature: 1.0,
            count: 1,
            split: Split::Test,
            brevity: BrevityMode::Exponential,
            plot_per_letter: 8,
        }
    }
}

/// Seed of one pipeline stage, derived from the run seed.
pub fn derive_seed(seed: u64, stage: &str) -> u64 {
    SeededRng::new(seed).fork(stream_key(stage)).next_u64()
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("invalid run config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Validated copy with the derived stage seeds filled in.
    pub fn resolved(&self) -> Result<Self> {
        let mut c = self.clone();
        c.styles.classifier.seed = derive_seed(c.seed, "classifier");
        c.styles.autoencoder.seed = derive_seed(c.seed, "autoencoder");
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        self.synth_config().letters()?;
        self.generator_config().validate()?;
        if self.codec.max_steps == 0 || self.codec.max_steps > MAX_STEPS {
            return fail(format!("codec.max_steps must be in 1..={MAX_STEPS}"));
        }
        if !(self.codec.max_duration > 0.0) {
            return fail("codec.max_duration must be positive".into());
        }
        if self.model.epochs == 0 || self.model.batch_size == 0 {
            return fail("model.epochs and model.batch_size must be positive".into());
        }
        if self.styles.kinds.is_empty() {
            return fail("styles.kinds is empty".into());
        }
        if self.styles.kinds.iter().collect::<BTreeSet<_>>().len() != self.styles.kinds.len() {
            return fail("styles.kinds lists a kind twice".into());
        }
        if self.styles.kinds.contains(&BiasKind::External) && self.styles.external.is_none() {
            return fail("the external kind needs styles.external".into());
        }
        if !(self.eval.temperature > 0.0) || !self.eval.temperature.is_finite() {
            return fail(format!("eval.temperature must be positive, got {}", self.eval.temperature));
        }
        if self.eval.count == 0 {
            return fail("eval.count must be positive".into());
        }
        if self.eval.split == Split::Train {
            log::warn!("evaluating on the training split");
        }
        Ok(())
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            alphabet: self.corpus.alphabet.clone(),
            n_writers: self.corpus.n_writers,
            reps_per_writer: self.corpus.reps_per_writer,
            seed: self.seed,
        }
    }

    pub fn clean_config(&self) -> CleanConfig {
        CleanConfig {
            max_steps: self.codec.max_steps,
            max_duration: self.codec.max_duration,
        }
    }

    pub fn generator_config(&self) -> GeneratorConfig {
        let m = &self.model;
        GeneratorConfig {
            hidden_layers: m.hidden_layers,
            hidden_size: m.hidden_size,
            dropout: m.dropout,
            lr: m.lr,
            bias_hidden: m.bias_hidden,
            max_gen_len: m.max_gen_len,
            temperature: self.eval.temperature,
            seed: derive_seed(self.seed, "generator"),
            ..GeneratorConfig::default()
        }
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            epochs: self.model.epochs,
            batch_size: self.model.batch_size,
            checkpoint: None,
        }
    }
}
