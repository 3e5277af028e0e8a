use crate::codec::{EncodedTracing, CLASSES, FRAME_DIM};
use crate::error::{Error, Result};
use crate::numerics::{Scalar, Tensor};

/// Padded, time-major teacher-forcing batch.
///
/// Step 0 of every sequence is fed the projected bias; step `t > 0` is fed
/// the one-hot of frame `t - 1`. Step `t` predicts frame `t`.
#[derive(Debug, Clone)]
pub struct Batch<T> {
    /// `[batch, bias_dim]`
    pub bias: Tensor<T>,
    /// `[steps * batch, 34]`; rows of step 0 are ignored.
    pub inputs: Tensor<T>,
    /// Target `(direction, speed)` per row.
    pub targets: Vec<(u8, u8)>,
    /// Rows that belong to a real frame rather than padding.
    pub mask: Vec<bool>,
    pub steps: usize,
    pub batch: usize,
}

impl<T: Scalar> Batch<T> {
    pub fn new(items: &[(&[f64], &EncodedTracing)]) -> Result<Self> {
        let Some(first) = items.first() else {
            return Err(Error::InsufficientData("empty batch".into()));
        };
        let dim = first.0.len();
        let batch = items.len();
        let steps = items.iter().map(|(_, s)| s.len()).max().unwrap_or(0);
        let mut bias = Tensor::zeros(&[batch, dim]);
        let mut inputs = Tensor::zeros(&[steps * batch, FRAME_DIM]);
        let mut targets = vec![(0, 0); steps * batch];
        let mut mask = vec![false; steps * batch];
        for (b, (vals, seq)) in items.iter().enumerate() {
            if vals.len() != dim {
                return Err(Error::BiasDimension {
                    expected: dim,
                    actual: vals.len(),
                });
            }
            for (d, &v) in bias.data_mut()[b * dim..(b + 1) * dim].iter_mut().zip(vals.iter()) {
                *d = T::lit(v);
            }
            for (t, f) in seq.frames().iter().enumerate() {
                let row = t * batch + b;
                targets[row] = (f.direction, f.speed);
                mask[row] = true;
                if t + 1 < steps {
                    let next = &mut inputs.data_mut()[(row + batch) * FRAME_DIM..(row + batch + 1) * FRAME_DIM];
                    next[f.direction as usize] = T::one();
                    next[CLASSES + f.speed as usize] = T::one();
                }
            }
        }
        Ok(Self {
            bias,
            inputs,
            targets,
            mask,
            steps,
            batch,
        })
    }

    /// Number of unmasked steps.
    pub fn active_steps(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}
