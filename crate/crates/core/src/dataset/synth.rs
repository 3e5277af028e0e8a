//! Parametric multi-writer corpus of uppercase letters.
//!
//! Each writer has a fixed style: slant, size, speed, a preferred starting
//! corner that decides which letters they trace in reverse, and hand jitter.
//! A sample is the letter skeleton put through that style plus small
//! per-repetition variation, then timed with a smooth speed profile and
//! resampled at 100 Hz.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::codec::{Point, Trajectory};
use crate::dataset::archetypes::skeleton;
use crate::dataset::sample::sample_id;
use crate::dataset::LetterSample;
use crate::error::{Error, Result};
use crate::numerics::{stream_key, SeededRng};

/// Letter height in pixels at scale 1.
const BASE_HEIGHT: f64 = 40.0;
/// Pen speed in pixels per second at speed gain 1.
const BASE_SPEED: f64 = 400.0;
const SAMPLE_RATE: f64 = 100.0;
/// Longest generated tracing, seconds; keeps every sample inside the cleaning limits.
const MAX_DURATION: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Uppercase letters to generate, e.g. `"ABCDEFGHIJ"`.
    pub alphabet: String,
    pub n_writers: usize,
    pub reps_per_writer: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            alphabet: "ABCDEFGHIJ".into(),
            n_writers: 20,
            reps_per_writer: 5,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn letters(&self) -> Result<Vec<char>> {
        let letters: Vec<char> = self.alphabet.chars().collect();
        if letters.is_empty() {
            return Err(Error::Config("empty alphabet".into()));
        }
        for &c in &letters {
            if skeleton(c).is_none() {
                return Err(Error::UnknownLetter(c));
            }
        }
        Ok(letters)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corner {
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
}

impl Corner {
    const ALL: [Corner; 4] = [Corner::TopLeft, Corner::TopRight, Corner::BottomLeft, Corner::BottomRight];

    fn position(self) -> (f64, f64) {
        match self {
            Corner::TopLeft => (0.0, 1.0),
            Corner::TopRight => (0.7, 1.0),
            Corner::BottomLeft => (0.0, 0.0),
            Corner::BottomRight => (0.7, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthStyle {
    pub writer_id: String,
    /// Shear angle in degrees; positive leans right.
    pub slant: f64,
    pub scale: f64,
    pub speed_gain: f64,
    /// Per letter: trace the skeleton end to start.
    pub stroke_order_flip: BTreeMap<char, bool>,
    /// Standard deviation of positional noise, pixels.
    pub jitter_sigma: f64,
    pub start_corner: Corner,
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

impl SynthStyle {
    /// Style of `writer_id` under corpus seed `seed`; depends on nothing else.
    pub fn for_writer(seed: u64, writer_id: &str) -> Self {
        let mut rng = SeededRng::new(seed).fork(stream_key(writer_id));
        let slant = rng.uniform(-18.0, 18.0);
        let scale = rng.uniform(0.8, 1.25);
        let speed_gain = (rng.uniform(0.7f64.ln(), 1.45f64.ln())).exp();
        let jitter_sigma = rng.uniform(0.1, 0.4);
        let start_corner = Corner::ALL[rng.below(4)];
        let target = start_corner.position();
        let stroke_order_flip = ('A'..='Z')
            .map(|c| {
                let path = skeleton(c).expect("archetype");
                let (first, last) = (path[0], path[path.len() - 1]);
                let prefers_end = dist2(last, target) < dist2(first, target);
                // writers are not perfectly consistent
                let habit_break = rng.bernoulli(0.15);
                (c, prefers_end ^ habit_break)
            })
            .collect();
        Self {
            writer_id: writer_id.to_string(),
            slant,
            scale,
            speed_gain,
            stroke_order_flip,
            jitter_sigma,
            start_corner,
        }
    }
}

pub fn writer_name(index: usize) -> String {
    format!("w{index:03}")
}

/// One tracing of `letter` in `style`; `rng` supplies the per-sample variation.
pub fn synth_letter(letter: char, style: &SynthStyle, rng: &mut SeededRng) -> Result<Trajectory> {
    let mut path = skeleton(letter).ok_or(Error::UnknownLetter(letter))?;
    if style.stroke_order_flip.get(&letter).copied().unwrap_or(false) {
        path.reverse();
    }
    let height = BASE_HEIGHT * style.scale * rng.uniform(0.96, 1.04);
    let shear = (style.slant + rng.uniform(-1.5, 1.5)).to_radians().tan();
    let offset = (rng.uniform(5.0, 25.0), rng.uniform(5.0, 25.0));
    let pts: Vec<(f64, f64)> = path
        .iter()
        .map(|&(x, y)| (offset.0 + height * (x + shear * y), offset.1 + height * y))
        .collect();

    let mut cum = vec![0.0];
    for w in pts.windows(2) {
        cum.push(cum[cum.len() - 1] + (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1));
    }
    let total = cum[cum.len() - 1];
    let speed = BASE_SPEED * style.speed_gain * rng.uniform(0.96, 1.04);
    let duration = (total / speed).clamp(2.0 / SAMPLE_RATE, MAX_DURATION);
    let steps = ((duration * SAMPLE_RATE).round() as usize).max(2);

    let mut out = Vec::with_capacity(steps + 1);
    let mut seg = 0;
    for i in 0..=steps {
        let u = i as f64 / steps as f64;
        // half constant speed, half minimum-jerk bell: never stops mid-letter
        let s = total * (0.5 * u + 0.5 * (10.0 * u.powi(3) - 15.0 * u.powi(4) + 6.0 * u.powi(5)));
        while seg + 1 < cum.len() - 1 && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let f = if len > 0.0 { ((s - cum[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        let (a, b) = (pts[seg], pts[seg + 1]);
        let x = a.0 + f * (b.0 - a.0) + style.jitter_sigma * rng.normal();
        let y = a.1 + f * (b.1 - a.1) + style.jitter_sigma * rng.normal();
        out.push(Point::new(x, y, i as f64 / SAMPLE_RATE));
    }
    Trajectory::new(out, style.writer_id.clone(), letter)
}

/// Generates `n_writers × |alphabet| × reps_per_writer` samples, writer by writer.
pub fn synth_corpus(cfg: &SynthConfig) -> Result<Vec<LetterSample>> {
    let letters = cfg.letters()?;
    let root = SeededRng::new(cfg.seed);
    let mut samples = Vec::with_capacity(cfg.n_writers * letters.len() * cfg.reps_per_writer);
    for w in 0..cfg.n_writers {
        let writer = writer_name(w);
        let style = SynthStyle::for_writer(cfg.seed, &writer);
        for &letter in &letters {
            for rep in 0..cfg.reps_per_writer {
                let id = sample_id(&writer, letter, rep);
                let mut rng = root.fork(stream_key(&id));
                let traj = synth_letter(letter, &style, &mut rng)?;
                samples.push(LetterSample::new(id, traj));
            }
        }
    }
    Ok(samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub seed: u64,
    pub config: SynthConfig,
    pub samples: usize,
    pub writers: usize,
    pub letters: usize,
}

impl CorpusManifest {
    pub fn new(cfg: &SynthConfig, samples: &[LetterSample]) -> Self {
        Self {
            seed: cfg.seed,
            config: cfg.clone(),
            samples: samples.len(),
            writers: cfg.n_writers,
            letters: cfg.alphabet.chars().count(),
        }
    }
}
