use serde::{Deserialize, Serialize};

use crate::codec::MAX_STEPS;
use crate::dataset::LetterSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleanConfig {
    pub max_steps: usize,
    /// Seconds.
    pub max_duration: f64,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self {
            max_steps: MAX_STEPS,
            max_duration: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub kept: usize,
    pub too_many_steps: usize,
    pub too_long: usize,
}

/// Drops tracings with more than `max_steps` displacements or lasting
/// longer than `max_duration`.
pub fn clean(samples: Vec<LetterSample>, cfg: &CleanConfig) -> (Vec<LetterSample>, CleanReport) {
    let mut report = CleanReport::default();
    let kept: Vec<LetterSample> = samples
        .into_iter()
        .filter(|s| {
            if s.trajectory.steps() > cfg.max_steps {
                report.too_many_steps += 1;
                false
            } else if s.trajectory.duration() > cfg.max_duration {
                report.too_long += 1;
                false
            } else {
                true
            }
        })
        .collect();
    report.kept = kept.len();
    (kept, report)
}
