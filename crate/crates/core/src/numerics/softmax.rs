use crate::error::{Error, Result};
use crate::numerics::{Scalar, Tensor};

/// Max-shifted softmax of one lane, in place.
pub fn softmax_in_place<T: Scalar>(lane: &mut [T]) {
    let max = lane.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in lane.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in lane.iter_mut() {
        *v /= sum;
    }
}

/// `log(sum(exp(lane)))`, stabilized.
pub fn log_sum_exp<T: Scalar>(lane: &[T]) -> T {
    let max = lane.iter().copied().fold(T::neg_infinity(), T::max);
    let sum = lane.iter().fold(T::zero(), |s, &v| s + (v - max).exp());
    max + sum.ln()
}

/// Softmax along `axis` of an N-d tensor.
pub fn softmax<T: Scalar>(logits: &Tensor<T>, axis: usize) -> Result<Tensor<T>> {
    let shape = logits.shape();
    if axis >= shape.len() {
        return Err(Error::Index {
            what: "softmax axis",
            index: axis,
            len: shape.len(),
        });
    }
    let inner: usize = shape[axis + 1..].iter().product();
    let extent = shape[axis];
    let outer: usize = shape[..axis].iter().product();
    let mut out = logits.clone();
    let data = out.data_mut();
    let mut lane = vec![T::zero(); extent];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * extent * inner + i;
            for (k, v) in lane.iter_mut().enumerate() {
                *v = data[base + k * inner];
            }
            softmax_in_place(&mut lane);
            for (k, &v) in lane.iter().enumerate() {
                data[base + k * inner] = v;
            }
        }
    }
    Ok(out)
}

/// Negative log likelihood of `target` under `softmax(logits)` and its
/// gradient `softmax(logits) - onehot(target)`.
pub fn nll_from_logits<T: Scalar>(logits: &[T], target: usize) -> Result<(T, Vec<T>)> {
    if target >= logits.len() {
        return Err(Error::Index {
            what: "class",
            index: target,
            len: logits.len(),
        });
    }
    let top = logits[target];
    let loss = if logits.iter().all(|&v| v <= top) {
        // keeps precision when the target dominates: ln(1 + sum of the rest)
        logits
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != target)
            .fold(T::zero(), |s, (_, &v)| s + (v - top).exp())
            .ln_1p()
    } else {
        log_sum_exp(logits) - top
    };
    let mut grad = logits.to_vec();
    softmax_in_place(&mut grad);
    grad[target] -= T::one();
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits() {
        let t = Tensor::<f64>::zeros(&[1, 17]);
        let s = softmax(&t, 1).unwrap();
        assert!(s.data().iter().all(|&p| (p - 1.0 / 17.0).abs() < 1e-15));
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let t = Tensor::<f64>::from_f64(&[2], &[1000.0, 0.0]).unwrap();
        let s = softmax(&t, 0).unwrap();
        assert!((s.data()[0] - 1.0).abs() < 1e-15 && s.data()[1] < 1e-300);
    }

    #[test]
    fn axis_zero_normalizes_columns() {
        let t = Tensor::<f64>::from_f64(&[2, 3], &[1., 2., 3., 0., -1., 5.]).unwrap();
        let s = softmax(&t, 0).unwrap();
        for j in 0..3 {
            assert!((s.at(0, j) + s.at(1, j) - 1.0).abs() < 1e-12);
        }
        assert!(softmax(&t, 2).is_err());
    }

    #[test]
    fn nll_uniform_is_ln_classes() {
        let (loss, grad) = nll_from_logits(&[0.0f64; 17], 3).unwrap();
        assert!((loss - 17f64.ln()).abs() < 1e-12);
        assert!((loss - 2.8332).abs() < 1e-4);
        assert!((grad.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn nll_decreases_to_zero_as_target_dominates() {
        let mut prev = f64::INFINITY;
        for step in 0..40 {
            let mut logits = [0.0f64; 17];
            logits[5] = step as f64;
            let (loss, _) = nll_from_logits(&logits, 5).unwrap();
            assert!(loss < prev);
            prev = loss;
        }
        assert!(prev < 1e-15);
    }

    #[test]
    fn nll_rejects_out_of_range_target() {
        assert!(matches!(
            nll_from_logits(&[0.0f64; 4], 4),
            Err(Error::Index { index: 4, .. })
        ));
    }
}
