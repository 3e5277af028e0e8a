use serde::{Deserialize, Serialize};

use crate::codec::Trajectory;
use crate::dataset::Raster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            _ => Err(crate::Error::Format(format!("unknown split {s:?}"))),
        }
    }
}

/// One isolated letter tracing with its optional image and split tag.
#[derive(Debug, Clone, PartialEq)]
pub struct LetterSample {
    /// `writer/letter/occurrence`, unique within a corpus.
    pub id: String,
    pub trajectory: Trajectory,
    pub raster: Option<Raster>,
    pub split: Split,
}

impl LetterSample {
    pub fn new(id: impl Into<String>, trajectory: Trajectory) -> Self {
        Self {
            id: id.into(),
            trajectory,
            raster: None,
            split: Split::Train,
        }
    }

    pub fn letter(&self) -> char {
        self.trajectory.letter
    }

    pub fn writer_id(&self) -> &str {
        &self.trajectory.writer_id
    }

    /// Raster of the trajectory, computed if absent.
    pub fn ensure_raster(&mut self) -> &Raster {
        if self.raster.is_none() {
            self.raster = Some(crate::dataset::rasterize(&self.trajectory));
        }
        self.raster.as_ref().expect("raster just set")
    }
}

pub(crate) fn sample_id(writer: &str, letter: char, occurrence: usize) -> String {
    format!("{writer}/{letter}/{occurrence}")
}
