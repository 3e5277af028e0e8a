use crate::codec::Trajectory;

pub const RASTER_SIDE: usize = 28;
pub const RASTER_MARGIN: usize = 2;

/// 28×28 grayscale image, row-major, row 0 at the top, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pixels: Vec<f64>,
}

impl Raster {
    pub fn blank() -> Self {
        Self {
            pixels: vec![0.0; RASTER_SIDE * RASTER_SIDE],
        }
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * RASTER_SIDE + col]
    }

    /// 8-bit quantized copy, for previews and hashing.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels.iter().map(|&v| (v * 255.0).round() as u8).collect()
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a.0 + t * dx - p.0, a.1 + t * dy - p.1);
    (qx * qx + qy * qy).sqrt()
}

/// Draws the pen path, scaled to fit inside a 2-pixel margin and centered.
pub fn rasterize(traj: &Trajectory) -> Raster {
    let side = RASTER_SIDE as f64;
    let inner = side - 2.0 * RASTER_MARGIN as f64;
    let (x0, y0, x1, y1) = traj.bounds();
    let extent = (x1 - x0).max(y1 - y0);
    let centre = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    let pts: Vec<(f64, f64)> = if extent > 0.0 {
        let s = inner / extent;
        traj.points()
            .iter()
            // pixel coordinates, y pointing down
            .map(|p| (side / 2.0 + (p.x - centre.0) * s, side / 2.0 - (p.y - centre.1) * s))
            .collect()
    } else {
        vec![(side / 2.0, side / 2.0)]
    };

    let mut img = Raster::blank();
    for r in 0..RASTER_SIDE {
        for c in 0..RASTER_SIDE {
            let p = (c as f64 + 0.5, r as f64 + 0.5);
            let d = if pts.len() == 1 {
                segment_distance(p, pts[0], pts[0])
            } else {
                pts.windows(2)
                    .map(|w| segment_distance(p, w[0], w[1]))
                    .fold(f64::INFINITY, f64::min)
            };
            img.pixels[r * RASTER_SIDE + c] = (1.5 - d).clamp(0.0, 1.0);
        }
    }
    let max = img.pixels.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        img.pixels.iter_mut().for_each(|v| *v /= max);
    }
    img
}
