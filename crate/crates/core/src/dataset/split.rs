use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{LetterSample, Split};
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StratifyBy {
    Letter,
    Writer,
}

/// Tags every sample train/validation/test with `fractions` taken inside each
/// stratum, so each letter (or writer) lands in every non-empty split.
pub fn split(
    mut samples: Vec<LetterSample>,
    fractions: [f64; 3],
    seed: u64,
    stratify_by: StratifyBy,
) -> Result<Vec<LetterSample>> {
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split fractions {fractions:?} must be in [0,1] and sum to 1")));
    }
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        let key = match stratify_by {
            StratifyBy::Letter => s.letter().to_string(),
            StratifyBy::Writer => s.writer_id().to_string(),
        };
        groups.entry(key).or_default().push(i);
    }
    let take = |n: usize, f: f64| if f > 0.0 { ((n as f64 * f).round() as usize).max(1) } else { 0 };
    let mut rng = SeededRng::new(seed);
    for (key, mut idx) in groups {
        if idx.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "group {key} has {} samples, need at least 3 to split",
                idx.len()
            )));
        }
        rng.shuffle(&mut idx);
        let n_val = take(idx.len(), fractions[1]);
        let n_test = take(idx.len(), fractions[2]).min(idx.len() - n_val - 1);
        for (k, &i) in idx.iter().enumerate() {
            samples[i].split = if k < n_val {
                Split::Validation
            } else if k < n_val + n_test {
                Split::Test
            } else {
                Split::Train
            };
        }
    }
    Ok(samples)
}

pub fn select(samples: &[LetterSample], which: Split) -> Vec<&LetterSample> {
    samples.iter().filter(|s| s.split == which).collect()
}
