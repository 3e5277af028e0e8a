use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::styles::{BiasKind, BiasVector, Provenance};

pub const LETTER_DIM: usize = 26;

pub fn letter_index(letter: char) -> Result<usize> {
    if letter.is_ascii_uppercase() {
        Ok((letter as u8 - b'A') as usize)
    } else {
        Err(Error::UnknownLetter(letter))
    }
}

pub fn index_letter(index: usize) -> Option<char> {
    (index < LETTER_DIM).then(|| (b'A' + index as u8) as char)
}

/// 26-dim one-hot over A..Z.
pub fn letter_bias(letter: char) -> Result<BiasVector> {
    let mut v = vec![0.0; LETTER_DIM];
    v[letter_index(letter)?] = 1.0;
    BiasVector::new(
        BiasKind::Letter,
        v,
        Provenance {
            letter: Some(letter),
            ..Provenance::default()
        },
    )
}

/// Ordered writer set; a writer's index is its position in sorted order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriterRegistry {
    writers: Vec<String>,
}

impl WriterRegistry {
    pub fn new<I, S>(writers: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = writers.into_iter().map(Into::into).collect();
        Self {
            writers: set.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.writers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.writers.is_empty()
    }

    pub fn writers(&self) -> &[String] {
        &self.writers
    }

    pub fn index(&self, writer_id: &str) -> Result<usize> {
        self.writers
            .binary_search_by(|w| w.as_str().cmp(writer_id))
            .map_err(|_| Error::UnknownWriter(writer_id.to_string()))
    }
}

/// `[letter one-hot (26) | writer one-hot (W)]`.
pub fn letter_writer_bias(letter: char, writer_id: &str, registry: &WriterRegistry) -> Result<BiasVector> {
    let w = registry.index(writer_id)?;
    let mut v = vec![0.0; LETTER_DIM + registry.len()];
    v[letter_index(letter)?] = 1.0;
    v[LETTER_DIM + w] = 1.0;
    BiasVector::new(
        BiasKind::LetterWriter,
        v,
        Provenance {
            letter: Some(letter),
            writer_id: Some(writer_id.to_string()),
            sample_id: None,
        },
    )
}
