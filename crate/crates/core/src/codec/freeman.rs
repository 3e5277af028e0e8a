use log::warn;

use crate::codec::{Trajectory, DIRECTION_LEVELS};

/// Angular width of one direction sector in degrees.
pub const SECTOR_DEG: f64 = 360.0 / DIRECTION_LEVELS as f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Displacement {
    /// Direction in degrees, `[0, 360)`, counter-clockwise from +x.
    pub angle: f64,
    /// Pixels per second.
    pub speed: f64,
}

/// Direction and speed of every step between consecutive points.
///
/// Points that repeat the previous position have no direction; they are
/// merged into the following step (its time span absorbs theirs).
pub fn displacements(traj: &Trajectory) -> Vec<Displacement> {
    let pts = traj.points();
    let mut out = Vec::with_capacity(pts.len() - 1);
    let mut anchor = pts[0];
    let mut merged = 0usize;
    for p in &pts[1..] {
        let (dx, dy) = (p.x - anchor.x, p.y - anchor.y);
        if dx == 0.0 && dy == 0.0 {
            merged += 1;
            continue;
        }
        out.push(Displacement {
            angle: angle_deg(dx, dy),
            speed: (dx * dx + dy * dy).sqrt() / (p.t - anchor.t),
        });
        anchor = *p;
    }
    if merged > 0 {
        warn!(
            "{} ({}): merged {merged} zero-length step(s)",
            traj.writer_id, traj.letter
        );
    }
    out
}

/// `atan2(dy, dx)` in degrees mapped to `[0, 360)`.
pub fn angle_deg(dx: f64, dy: f64) -> f64 {
    let a = dy.atan2(dx).to_degrees();
    let a = if a < 0.0 { a + 360.0 } else { a };
    if a >= 360.0 {
        0.0
    } else {
        a
    }
}

/// 16-sector chain code; sector `k` is centred on `k * 22.5` degrees.
pub fn freeman_encode(angle: f64) -> u8 {
    let shifted = (angle + SECTOR_DEG / 2.0).rem_euclid(360.0);
    ((shifted / SECTOR_DEG).floor() as usize).min(DIRECTION_LEVELS - 1) as u8
}

/// Centre angle of a direction code, in degrees.
pub fn sector_center(code: u8) -> f64 {
    code as f64 * SECTOR_DEG
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::Point;

    #[test]
    fn unit_steps() {
        let t = Trajectory::new(
            vec![Point::new(0., 0., 0.), Point::new(1., 0., 0.01), Point::new(1., 1., 0.02)],
            "w",
            'A',
        )
        .unwrap();
        let d = displacements(&t);
        assert_eq!(d[0].angle, 0.0);
        assert!((d[0].speed - 100.0).abs() < 1e-9);
        assert!((d[1].angle - 90.0).abs() < 1e-12);
    }

    #[test]
    fn repeated_points_merge() {
        let t = Trajectory::new(
            vec![
                Point::new(0., 0., 0.),
                Point::new(0., 0., 0.01),
                Point::new(2., 0., 0.02),
            ],
            "w",
            'A',
        )
        .unwrap();
        let d = displacements(&t);
        assert_eq!(d.len(), 1);
        assert!((d[0].speed - 100.0).abs() < 1e-9);
    }

    #[test]
    fn sector_boundaries() {
        assert_eq!(freeman_encode(0.0), 0);
        assert_eq!(freeman_encode(90.0), 4);
        assert_eq!(freeman_encode(11.24), 0);
        assert_eq!(freeman_encode(11.26), 1);
        assert_eq!(freeman_encode(359.0), 0);
        assert_eq!(freeman_encode(348.74), 15);
        let tiny = angle_deg(1.0, -1e-300);
        assert!((0.0..360.0).contains(&tiny));
        assert!(angle_deg(1.0, -1.0) > 314.0);
    }
}
