use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One pen sample: position in pixels, time in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl Point {
    pub fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }
}

/// Raw pen path of one isolated letter. At least two points, strictly
/// increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    points: Vec<Point>,
    pub writer_id: String,
    pub letter: char,
}

impl Trajectory {
    pub fn new(points: Vec<Point>, writer_id: impl Into<String>, letter: char) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidTrajectory(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(i) = points
            .iter()
            .position(|p| !(p.x.is_finite() && p.y.is_finite() && p.t.is_finite()))
        {
            return Err(Error::InvalidTrajectory(format!("non-finite value at point {i}")));
        }
        if let Some(i) = points.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidTrajectory(format!(
                "non-monotonic timestamp at point {}",
                i + 1
            )));
        }
        Ok(Self {
            points,
            writer_id: writer_id.into(),
            letter,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Number of displacement steps (`points - 1`).
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn duration(&self) -> f64 {
        self.points[self.points.len() - 1].t - self.points[0].t
    }

    pub fn start(&self) -> (f64, f64) {
        (self.points[0].x, self.points[0].y)
    }

    /// `(min_x, min_y, max_x, max_y)`
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.points.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), p| (a.min(p.x), b.min(p.y), c.max(p.x), d.max(p.y)),
        )
    }
}
