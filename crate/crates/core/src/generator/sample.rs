use crate::codec::{EncodedTracing, Frame, CLASSES, EOS, FRAME_DIM};
use crate::error::Result;
use crate::generator::model::gru_prefix;
use crate::generator::GeneratorModel;
use crate::numerics::gru::gru_view;
use crate::numerics::{dense_forward, gru_forward_seq, softmax_in_place, Activation, Scalar, SeededRng, Tensor};
use crate::styles::BiasVector;

/// Temperatures below this decode greedily.
pub const GREEDY_TEMPERATURE: f64 = 1e-6;

fn pick(logits: &[f64], temperature: f64, rng: &mut SeededRng) -> usize {
    if temperature < GREEDY_TEMPERATURE {
        return logits
            .iter()
            .enumerate()
            .fold(0, |best, (i, &v)| if v > logits[best] { i } else { best });
    }
    let mut p: Vec<f64> = logits.iter().map(|&v| v / temperature).collect();
    softmax_in_place(&mut p);
    rng.categorical(&p)
}

impl<T: Scalar> GeneratorModel<T> {
    /// Autoregressive generation from frame 0 until the direction block emits
    /// EOS or `max_gen_len` frames exist. The speed code of a content frame is
    /// drawn among the 16 speed levels only.
    pub fn sample(&self, bias: &BiasVector, temperature: f64, rng: &mut SeededRng) -> Result<EncodedTracing> {
        let frame0 = self.bias_project(bias)?;
        let h = self.config.hidden_size;
        let views = (0..self.config.hidden_layers)
            .map(|l| gru_view(&self.params, &gru_prefix(l)))
            .collect::<Result<Vec<_>>>()?;
        let (head_w, head_b) = (self.params.value("head.w")?, self.params.value("head.b")?);
        let mut states: Vec<Tensor<T>> = vec![Tensor::zeros(&[1, h]); views.len()];
        let mut x = Tensor::new(vec![1, FRAME_DIM], frame0)?;
        let mut frames = Vec::new();
        while frames.len() < self.config.max_gen_len {
            for (view, state) in views.iter().zip(states.iter_mut()) {
                let (out, _) = gru_forward_seq(view, &x, state, 1)?;
                *state = out.clone();
                x = out;
            }
            let (logits, _) = dense_forward(&x, head_w, head_b, Activation::Linear)?;
            let l: Vec<f64> = logits.data().iter().map(|v| v.as_f64()).collect();
            let direction = pick(&l[..CLASSES], temperature, rng) as u8;
            if direction == EOS {
                break;
            }
            let speed = pick(&l[CLASSES..CLASSES + EOS as usize], temperature, rng) as u8;
            frames.push(Frame::new(direction, speed));
            let mut next = Tensor::zeros(&[1, FRAME_DIM]);
            next.data_mut()[direction as usize] = T::one();
            next.data_mut()[CLASSES + speed as usize] = T::one();
            x = next;
        }
        frames.push(Frame::EOS);
        EncodedTracing::new(frames)
    }
}
