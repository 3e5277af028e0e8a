use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasKind {
    Letter,
    LetterWriter,
    ClassifierEmbedding,
    AutoencoderLatent,
    External,
}

impl BiasKind {
    pub const ALL: [BiasKind; 5] = [
        BiasKind::Letter,
        BiasKind::LetterWriter,
        BiasKind::ClassifierEmbedding,
        BiasKind::AutoencoderLatent,
        BiasKind::External,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BiasKind::Letter => "letter",
            BiasKind::LetterWriter => "letter_writer",
            BiasKind::ClassifierEmbedding => "classifier_embedding",
            BiasKind::AutoencoderLatent => "autoencoder_latent",
            BiasKind::External => "external",
        }
    }

    /// Whether vectors of this kind come from a trained image model.
    pub fn is_image_based(self) -> bool {
        matches!(self, BiasKind::ClassifierEmbedding | BiasKind::AutoencoderLatent)
    }
}

impl fmt::Display for BiasKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BiasKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BiasKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown bias kind `{s}`")))
    }
}

/// Where a bias vector came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub letter: Option<char>,
    pub writer_id: Option<String>,
    pub sample_id: Option<String>,
}

/// Conditioning input of the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasVector {
    pub kind: BiasKind,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl BiasVector {
    pub fn new(kind: BiasKind, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty bias vector".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{kind} bias vector")));
        }
        Ok(Self { kind, values, provenance })
    }

    /// An externally supplied vector.
    pub fn external(values: Vec<f64>) -> Result<Self> {
        Self::new(BiasKind::External, values, Provenance::default())
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}
