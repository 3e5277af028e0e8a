use serde::{Deserialize, Serialize};

use crate::codec::{DIRECTION_LEVELS, SPEED_LEVELS};
use crate::error::{Error, Result};

/// Speed binning fitted on training data.
///
/// Bins hold equal shares of the training speeds. A speed falls in bin `i`
/// when `edges[i-1] <= s < edges[i]`; bins 0 and 15 are closed by the
/// observed training minimum and maximum, and a code decodes to the midpoint
/// of its bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec {
    pub direction_levels: usize,
    pub speed_bin_edges: Vec<f64>,
    pub speed_bin_centers: Vec<f64>,
    pub speed_min: f64,
    pub speed_max: f64,
}

const TEXT_MAGIC: &str = "hwstyle-quantizer";
const TEXT_VERSION: u32 = 1;

pub fn fit_speed_quantizer(speeds: &[f64]) -> Result<QuantizerSpec> {
    let mut s: Vec<f64> = speeds.iter().copied().filter(|v| v.is_finite()).collect();
    if s.len() != speeds.len() {
        return Err(Error::InvalidInput("non-finite speed".into()));
    }
    s.sort_by(f64::total_cmp);
    let mut distinct = s.clone();
    distinct.dedup();
    if distinct.len() < SPEED_LEVELS {
        return Err(Error::InsufficientData(format!(
            "{} distinct speeds, need at least {SPEED_LEVELS}",
            distinct.len()
        )));
    }
    let n = s.len();
    let edges: Vec<f64> = (1..SPEED_LEVELS)
        .map(|k| {
            let idx = ((k * n) as f64 / SPEED_LEVELS as f64).round() as usize;
            let idx = idx.clamp(1, n - 1);
            0.5 * (s[idx - 1] + s[idx])
        })
        .collect();
    let spec = QuantizerSpec::from_edges(edges, s[0], s[n - 1])?;
    Ok(spec)
}

impl QuantizerSpec {
    pub fn from_edges(edges: Vec<f64>, speed_min: f64, speed_max: f64) -> Result<Self> {
        if edges.len() != SPEED_LEVELS - 1 {
            return Err(Error::Format(format!("expected {} edges", SPEED_LEVELS - 1)));
        }
        if edges.windows(2).any(|w| w[1] <= w[0]) || speed_min > edges[0] || speed_max < edges[edges.len() - 1] {
            return Err(Error::InsufficientData(
                "speed quantiles are not strictly ascending".into(),
            ));
        }
        let centers = (0..SPEED_LEVELS)
            .map(|i| {
                let lo = if i == 0 { speed_min } else { edges[i - 1] };
                let hi = if i == SPEED_LEVELS - 1 { speed_max } else { edges[i] };
                0.5 * (lo + hi)
            })
            .collect();
        let spec = Self {
            direction_levels: DIRECTION_LEVELS,
            speed_bin_edges: edges,
            speed_bin_centers: centers,
            speed_min,
            speed_max,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.direction_levels != DIRECTION_LEVELS
            || self.speed_bin_edges.len() != SPEED_LEVELS - 1
            || self.speed_bin_centers.len() != SPEED_LEVELS
        {
            return Err(Error::Format("quantizer has wrong level counts".into()));
        }
        for (i, &c) in self.speed_bin_centers.iter().enumerate() {
            if self.quantize_speed(c) as usize != i {
                return Err(Error::InsufficientData(format!("speed bin {i} is empty")));
            }
        }
        Ok(())
    }

    pub fn quantize_speed(&self, speed: f64) -> u8 {
        self.speed_bin_edges.partition_point(|&e| e <= speed) as u8
    }

    /// `(lower, upper)` bounds of a bin.
    pub fn bin_bounds(&self, code: u8) -> (f64, f64) {
        let i = code as usize;
        let lo = if i == 0 { self.speed_min } else { self.speed_bin_edges[i - 1] };
        let hi = if i == SPEED_LEVELS - 1 { self.speed_max } else { self.speed_bin_edges[i] };
        (lo, hi)
    }

    pub fn center(&self, code: u8) -> f64 {
        self.speed_bin_centers[code as usize]
    }

    /// Human-readable record; floats use shortest round-trip notation.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        format!(
            "{TEXT_MAGIC} {TEXT_VERSION}\ndirection_levels {}\nspeed_levels {}\nspeed_min {}\nspeed_max {}\nedges {}\ncenters {}\n",
            self.direction_levels,
            SPEED_LEVELS,
            self.speed_min,
            self.speed_max,
            join(&self.speed_bin_edges),
            join(&self.speed_bin_centers),
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if header != format!("{TEXT_MAGIC} {TEXT_VERSION}") {
            return Err(Error::Format(format!("bad quantizer header {header:?}")));
        }
        let mut field = |key: &str| -> Result<Vec<f64>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Format(format!("missing `{key}`")))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(Error::Format(format!("expected `{key}`, got {line:?}")));
            }
            parts
                .map(|p| p.parse::<f64>().map_err(|e| Error::Format(format!("{key}: {e}"))))
                .collect()
        };
        let levels = field("direction_levels")?;
        let speed_levels = field("speed_levels")?;
        let min = field("speed_min")?;
        let max = field("speed_max")?;
        let edges = field("edges")?;
        let centers = field("centers")?;
        if levels != [DIRECTION_LEVELS as f64] || speed_levels != [SPEED_LEVELS as f64] {
            return Err(Error::Format("unsupported level counts".into()));
        }
        let (Some(&speed_min), Some(&speed_max)) = (min.first(), max.first()) else {
            return Err(Error::Format("missing speed range".into()));
        };
        let spec = Self {
            direction_levels: DIRECTION_LEVELS,
            speed_bin_edges: edges,
            speed_bin_centers: centers,
            speed_min,
            speed_max,
        };
        spec.validate()?;
        Ok(spec)
    }
}
