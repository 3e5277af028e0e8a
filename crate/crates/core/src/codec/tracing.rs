use crate::codec::freeman::{displacements, freeman_encode, sector_center};
use crate::codec::{fit_speed_quantizer, Point, QuantizerSpec, Trajectory, CLASSES, EOS, FRAME_DIM, MAX_STEPS};
use crate::error::{Error, Result};

/// One time step: a direction code and a speed code, each in `0..=16`
/// where 16 is end-of-sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frame {
    pub direction: u8,
    pub speed: u8,
}

impl Frame {
    pub const EOS: Frame = Frame {
        direction: EOS,
        speed: EOS,
    };

    pub fn new(direction: u8, speed: u8) -> Self {
        Self { direction, speed }
    }

    pub fn is_eos(&self) -> bool {
        self.direction == EOS || self.speed == EOS
    }

    /// Dual one-hot layout: `[direction block (17) | speed block (17)]`.
    pub fn one_hot(&self) -> [f64; FRAME_DIM] {
        let mut v = [0.0; FRAME_DIM];
        v[self.direction as usize] = 1.0;
        v[CLASSES + self.speed as usize] = 1.0;
        v
    }

    pub fn from_one_hot(v: &[f64]) -> Result<Self> {
        if v.len() != FRAME_DIM {
            return Err(Error::Format(format!("frame has {} values, expected {FRAME_DIM}", v.len())));
        }
        let hot = |block: &[f64]| -> Result<u8> {
            let mut found = None;
            for (i, &x) in block.iter().enumerate() {
                if x == 1.0 {
                    if found.is_some() {
                        return Err(Error::Format("multiple hot bits in a frame block".into()));
                    }
                    found = Some(i as u8);
                } else if x != 0.0 {
                    return Err(Error::Format(format!("non-binary frame value {x}")));
                }
            }
            found.ok_or_else(|| Error::Format("no hot bit in a frame block".into()))
        };
        Ok(Self {
            direction: hot(&v[..CLASSES])?,
            speed: hot(&v[CLASSES..])?,
        })
    }
}

/// Frame sequence of one tracing, terminated by exactly one EOS frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncodedTracing {
    frames: Vec<Frame>,
}

impl EncodedTracing {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        let Some((last, body)) = frames.split_last() else {
            return Err(Error::Format("empty tracing".into()));
        };
        if *last != Frame::EOS {
            return Err(Error::Format("tracing must end with an EOS frame".into()));
        }
        if body.len() > MAX_STEPS {
            return Err(Error::Rejected(format!(
                "{} steps exceed the limit of {MAX_STEPS}",
                body.len()
            )));
        }
        if let Some(i) = body
            .iter()
            .position(|f| f.direction >= EOS || f.speed >= EOS)
        {
            return Err(Error::Format(format!("interior EOS or invalid code at frame {i}")));
        }
        Ok(Self { frames })
    }

    /// Builds a tracing from content codes (no EOS); the EOS frame is appended.
    pub fn from_codes(directions: &[u8], speeds: &[u8]) -> Result<Self> {
        if directions.len() != speeds.len() {
            return Err(Error::Format("direction and speed code counts differ".into()));
        }
        let mut frames: Vec<Frame> = directions
            .iter()
            .zip(speeds)
            .map(|(&d, &s)| Frame::new(d, s))
            .collect();
        frames.push(Frame::EOS);
        Self::new(frames)
    }

    pub fn from_one_hot(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows.iter().map(|r| Frame::from_one_hot(r)).collect::<Result<_>>()?)
    }

    /// Frame count including the terminal EOS.
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    /// Frames before EOS.
    pub fn content(&self) -> &[Frame] {
        &self.frames[..self.frames.len() - 1]
    }

    pub fn direction_codes(&self) -> Vec<u8> {
        self.content().iter().map(|f| f.direction).collect()
    }

    pub fn speed_codes(&self) -> Vec<u8> {
        self.content().iter().map(|f| f.speed).collect()
    }

    pub fn one_hot_rows(&self) -> Vec<[f64; FRAME_DIM]> {
        self.frames.iter().map(Frame::one_hot).collect()
    }
}

/// Fits the speed bins to every displacement of `trajectories`.
pub fn fit_quantizer<'a>(trajectories: impl IntoIterator<Item = &'a Trajectory>) -> Result<QuantizerSpec> {
    let speeds: Vec<f64> = trajectories
        .into_iter()
        .flat_map(|t| displacements(t).into_iter().map(|d| d.speed))
        .collect();
    fit_speed_quantizer(&speeds)
}

/// One frame per displacement plus the terminal EOS frame.
pub fn encode_tracing(traj: &Trajectory, spec: &QuantizerSpec) -> Result<EncodedTracing> {
    if traj.steps() > MAX_STEPS {
        return Err(Error::Rejected(format!(
            "{} displacement steps exceed the limit of {MAX_STEPS}",
            traj.steps()
        )));
    }
    let mut frames: Vec<Frame> = displacements(traj)
        .into_iter()
        .map(|d| Frame::new(freeman_encode(d.angle), spec.quantize_speed(d.speed)))
        .collect();
    frames.push(Frame::EOS);
    EncodedTracing::new(frames)
}

/// Replays the frames from `start`: each step moves `center(speed) * dt`
/// along the direction sector's centre angle.
pub fn decode_tracing(enc: &EncodedTracing, spec: &QuantizerSpec, start: (f64, f64), dt: f64) -> Result<Trajectory> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    let (mut x, mut y) = start;
    let mut points = vec![Point::new(x, y, 0.0)];
    for (i, f) in enc.frames().iter().enumerate() {
        if f.is_eos() {
            break;
        }
        let step = spec.center(f.speed) * dt;
        let a = sector_center(f.direction).to_radians();
        x += step * a.cos();
        y += step * a.sin();
        points.push(Point::new(x, y, (i + 1) as f64 * dt));
    }
    if points.len() < 2 {
        // EOS-only tracing: a single resting point
        points.push(Point::new(x, y, dt));
    }
    Trajectory::new(points, "", '?')
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::fit_speed_quantizer;

    fn spec() -> QuantizerSpec {
        fit_speed_quantizer(&(1..=160).map(|v| v as f64 * 10.0).collect::<Vec<_>>()).unwrap()
    }

    fn line(n: usize) -> Trajectory {
        let pts = (0..n).map(|i| Point::new(i as f64, 0.0, i as f64 * 0.01)).collect();
        Trajectory::new(pts, "w", 'I').unwrap()
    }

    #[test]
    fn two_points_give_one_frame_and_eos() {
        let e = encode_tracing(&line(2), &spec()).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e.frames()[1], Frame::EOS);
        assert_eq!(e.frames()[0].direction, 0);
    }

    #[test]
    fn overlong_tracing_rejected() {
        assert!(encode_tracing(&line(100), &spec()).is_ok());
        assert!(matches!(encode_tracing(&line(101), &spec()), Err(Error::Rejected(_))));
    }

    #[test]
    fn single_frame_decode() {
        let q = spec();
        let e = EncodedTracing::from_codes(&[0], &[3]).unwrap();
        let t = decode_tracing(&e, &q, (0.0, 0.0), 0.01).unwrap();
        let end = t.points()[1];
        assert!((end.x - q.center(3) * 0.01).abs() < 1e-12 && end.y.abs() < 1e-12);
    }

    #[test]
    fn invariant_violations() {
        assert!(EncodedTracing::new(vec![]).is_err());
        assert!(EncodedTracing::new(vec![Frame::new(1, 1)]).is_err());
        assert!(EncodedTracing::new(vec![Frame::new(16, 2), Frame::EOS]).is_err());
        assert!(EncodedTracing::new(vec![Frame::EOS]).is_ok());
    }

    #[test]
    fn malformed_one_hot() {
        let mut v = Frame::new(2, 5).one_hot().to_vec();
        assert_eq!(Frame::from_one_hot(&v).unwrap(), Frame::new(2, 5));
        v[3] = 1.0;
        assert!(Frame::from_one_hot(&v).is_err());
        let empty = vec![0.0; FRAME_DIM];
        assert!(Frame::from_one_hot(&empty).is_err());
        assert!(Frame::from_one_hot(&[1.0; 3]).is_err());
    }
}
