//! Persisted bias lookups.
//!
//! ```text
//! hwstyle-embeddings 1
//! kind    <bias kind>
//! dim     <dimension>
//! count   <entries>
//! seed    <seed>
//! <key>   <v_1> <v_2> ... <v_dim>
//! ```
//!
//! Fields are tab-separated and values use the shortest decimal form that
//! parses back to the same f64. Keys are `A` (letter), `A@writer`
//! (letter and writer) or a sample id (image kinds).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dataset::LetterSample;
use crate::error::{Error, Result};
use crate::numerics::Scalar;
use crate::styles::onehot::{index_letter, letter_bias, letter_writer_bias, WriterRegistry, LETTER_DIM};
use crate::styles::{Autoencoder, BiasKind, BiasVector, LetterClassifier, Provenance};

const HEADER: &str = "hwstyle-embeddings 1";

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub kind: BiasKind,
    pub dim: usize,
    pub seed: u64,
    entries: BTreeMap<String, Vec<f64>>,
}

pub fn letter_writer_key(letter: char, writer_id: &str) -> String {
    format!("{letter}@{writer_id}")
}

/// Trained image models available to [`build_embedding_table`].
#[derive(Debug, Clone, Copy)]
pub struct StyleModels<'a, T> {
    pub classifier: Option<&'a LetterClassifier<T>>,
    pub autoencoder: Option<&'a Autoencoder<T>>,
}

impl<T> Default for StyleModels<'_, T> {
    fn default() -> Self {
        Self {
            classifier: None,
            autoencoder: None,
        }
    }
}

impl EmbeddingTable {
    pub fn new(kind: BiasKind, dim: usize, seed: u64) -> Self {
        Self {
            kind,
            dim,
            seed,
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, key: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let key = key.into();
        if key.is_empty() || key.contains(['\t', '\n', '\r']) {
            return Err(Error::InvalidInput(format!("invalid table key {key:?}")));
        }
        if values.len() != self.dim {
            return Err(Error::BiasDimension {
                expected: self.dim,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("embedding for {key}")));
        }
        self.entries.insert(key, values);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&[f64]> {
        self.entries.get(key).map(Vec::as_slice)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Bias vector conditioning `sample`'s tracing.
    pub fn bias_for(&self, sample: &LetterSample) -> Result<BiasVector> {
        let letter = sample.letter();
        let writer = sample.writer_id();
        let lw = letter_writer_key(letter, writer);
        let l = letter.to_string();
        let key = match self.kind {
            BiasKind::Letter => l.as_str(),
            BiasKind::LetterWriter => lw.as_str(),
            BiasKind::ClassifierEmbedding | BiasKind::AutoencoderLatent => sample.id.as_str(),
            BiasKind::External => [sample.id.as_str(), lw.as_str(), l.as_str()]
                .into_iter()
                .find(|k| self.entries.contains_key(*k))
                .unwrap_or(sample.id.as_str()),
        };
        let values = self
            .get(key)
            .ok_or_else(|| Error::InvalidInput(format!("no {} bias for sample {}", self.kind, sample.id)))?;
        BiasVector::new(
            self.kind,
            values.to_vec(),
            Provenance {
                letter: Some(letter),
                writer_id: Some(writer.to_string()),
                sample_id: Some(sample.id.clone()),
            },
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{HEADER}");
        let _ = writeln!(out, "kind\t{}", self.kind);
        let _ = writeln!(out, "dim\t{}", self.dim);
        let _ = writeln!(out, "count\t{}", self.entries.len());
        let _ = writeln!(out, "seed\t{}", self.seed);
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push('\t');
            for (i, x) in v.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Format(format!("embedding table: {m}"));
        let mut lines = text.lines();
        if lines.next() != Some(HEADER) {
            return Err(bad("missing header".into()));
        }
        let mut field = |name: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad(format!("missing {name}")))?;
            match line.split_once('\t') {
                Some((k, v)) if k == name => Ok(v.to_string()),
                _ => Err(bad(format!("expected {name}, got {line:?}"))),
            }
        };
        let kind: BiasKind = field("kind")?.parse()?;
        let dim: usize = field("dim")?.parse().map_err(|e| bad(format!("dim: {e}")))?;
        let count: usize = field("count")?.parse().map_err(|e| bad(format!("count: {e}")))?;
        let seed: u64 = field("seed")?.parse().map_err(|e| bad(format!("seed: {e}")))?;
        let mut table = Self::new(kind, dim, seed);
        for line in lines {
            let (k, vals) = line.split_once('\t').ok_or_else(|| bad(format!("bad record {line:?}")))?;
            let values = vals
                .split(' ')
                .map(|v| v.parse::<f64>().map_err(|e| bad(format!("{k}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if table.entries.contains_key(k) {
                return Err(bad(format!("duplicate key {k}")));
            }
            table.insert(k, values)?;
        }
        if table.len() != count {
            return Err(bad(format!("header says {count} entries, found {}", table.len())));
        }
        Ok(table)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_text(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// One vector per letter (26), per letter and writer (26·W), or per sample for image kinds.
pub fn build_embedding_table<T: Scalar>(
    kind: BiasKind,
    samples: &[LetterSample],
    models: StyleModels<'_, T>,
    seed: u64,
) -> Result<EmbeddingTable> {
    let letters = || (0..LETTER_DIM).filter_map(index_letter);
    match kind {
        BiasKind::Letter => {
            let mut t = EmbeddingTable::new(kind, LETTER_DIM, seed);
            for c in letters() {
                t.insert(c.to_string(), letter_bias(c)?.values)?;
            }
            Ok(t)
        }
        BiasKind::LetterWriter => {
            let reg = WriterRegistry::new(samples.iter().map(|s| s.writer_id().to_string()));
            if reg.is_empty() {
                return Err(Error::InsufficientData("no writers in the dataset".into()));
            }
            let mut t = EmbeddingTable::new(kind, LETTER_DIM + reg.len(), seed);
            for w in reg.writers() {
                for c in letters() {
                    t.insert(letter_writer_key(c, w), letter_writer_bias(c, w, &reg)?.values)?;
                }
            }
            Ok(t)
        }
        BiasKind::ClassifierEmbedding | BiasKind::AutoencoderLatent => {
            let embed: Box<dyn Fn(&crate::dataset::Raster) -> Result<Vec<f64>>> = match kind {
                BiasKind::ClassifierEmbedding => {
                    let m = models.classifier.ok_or(Error::Untrained("letter classifier"))?;
                    Box::new(move |r| m.embedding(r))
                }
                _ => {
                    let m = models.autoencoder.ok_or(Error::Untrained("autoencoder"))?;
                    Box::new(move |r| m.latent(r))
                }
            };
            let mut t: Option<EmbeddingTable> = None;
            for s in samples {
                let raster = s
                    .raster
                    .as_ref()
                    .ok_or_else(|| Error::InvalidInput(format!("sample {} has no raster", s.id)))?;
                let v = embed(raster)?;
                t.get_or_insert_with(|| EmbeddingTable::new(kind, v.len(), seed)).insert(s.id.clone(), v)?;
            }
            t.ok_or_else(|| Error::InsufficientData("no samples to embed".into()))
        }
        BiasKind::External => Err(Error::Config("external tables are loaded from a file, not built".into())),
    }
}
