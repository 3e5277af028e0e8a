//! Finite-difference and brute-force oracles for the numerics layer.

use hwstyle::numerics::*;
use proptest::prelude::*;

const H: f64 = 1e-5;

fn rand_tensor(shape: &[usize], rng: &mut SeededRng, scale: f64) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    Tensor::from_f64(shape, &(0..n).map(|_| rng.normal() * scale).collect::<Vec<_>>()).unwrap()
}

fn dot(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// Checks the analytic gradient of `loss(t)` for one tensor by perturbing it.
fn check_tensor(
    t: &Tensor<f64>,
    analytic: &Tensor<f64>,
    tol: f64,
    mut loss: impl FnMut(&Tensor<f64>) -> f64,
) -> GradCheckReport {
    let shape = t.shape().to_vec();
    let r = grad_check(
        |x: &[f64]| loss(&Tensor::new(shape.clone(), x.to_vec()).unwrap()),
        t.data(),
        analytic.data(),
        H,
        tol,
    );
    assert!(r.passed, "{r:?}");
    r
}

#[test]
fn matmul_matches_triple_loop() {
    let mut rng = SeededRng::new(11);
    for _ in 0..20 {
        let a = rand_tensor(&[5, 4], &mut rng, 1.0);
        let b = rand_tensor(&[4, 3], &mut rng, 1.0);
        let c = a.matmul(&b).unwrap();
        for i in 0..5 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..4 {
                    s += a.at(i, k) * b.at(k, j);
                }
                assert!((c.at(i, j) - s).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn matmul_is_associative() {
    let mut rng = SeededRng::new(12);
    let a = rand_tensor(&[3, 4], &mut rng, 1.0);
    let b = rand_tensor(&[4, 5], &mut rng, 1.0);
    let c = rand_tensor(&[5, 2], &mut rng, 1.0);
    let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
    let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
    assert!(left.max_abs_diff(&right) < 1e-12);
}

#[test]
fn dense_backward_matches_finite_differences() {
    let mut rng = SeededRng::new(21);
    for act in [Activation::Linear, Activation::Tanh, Activation::Relu, Activation::Sigmoid]
        .into_iter()
        .cycle()
        .take(20)
    {
        let x = rand_tensor(&[3, 4], &mut rng, 1.0);
        let w = rand_tensor(&[4, 5], &mut rng, 0.5);
        let b = rand_tensor(&[5], &mut rng, 0.5);
        let r = rand_tensor(&[3, 5], &mut rng, 1.0);
        let loss = |x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>| {
            dot(&dense_forward(x, w, b, act).unwrap().0, &r)
        };
        let (_, cache) = dense_forward(&x, &w, &b, act).unwrap();
        let g = dense_backward(&cache, &w, &r).unwrap();
        let tol = 1e-6;
        check_tensor(&x, &g.input, tol, |t| loss(t, &w, &b));
        check_tensor(&w, &g.weight, tol, |t| loss(&x, t, &b));
        check_tensor(&b, &g.bias, tol, |t| loss(&x, &w, t));
    }
}

#[test]
fn composed_dense_tanh_dense_passes() {
    let mut rng = SeededRng::new(22);
    let x = rand_tensor(&[2, 3], &mut rng, 1.0);
    let w1 = rand_tensor(&[3, 6], &mut rng, 0.7);
    let b1 = rand_tensor(&[6], &mut rng, 0.1);
    let w2 = rand_tensor(&[6, 2], &mut rng, 0.7);
    let b2 = rand_tensor(&[2], &mut rng, 0.1);
    let target = rand_tensor(&[2, 2], &mut rng, 1.0);
    let f = |w1: &Tensor<f64>| {
        let (h, _) = dense_forward(&x, w1, &b1, Activation::Tanh).unwrap();
        let (y, _) = dense_forward(&h, &w2, &b2, Activation::Linear).unwrap();
        y.data().iter().zip(target.data()).map(|(a, b)| 0.5 * (a - b).powi(2)).sum::<f64>()
    };
    let (h, c1) = dense_forward(&x, &w1, &b1, Activation::Tanh).unwrap();
    let (y, c2) = dense_forward(&h, &w2, &b2, Activation::Linear).unwrap();
    let mut dy = y.clone();
    for (d, t) in dy.data_mut().iter_mut().zip(target.data()) {
        *d -= t;
    }
    let g2 = dense_backward(&c2, &w2, &dy).unwrap();
    let g1 = dense_backward(&c1, &w1, &g2.input).unwrap();
    check_tensor(&w1, &g1.weight, 1e-6, f);
}

#[test]
fn gru_backward_matches_finite_differences() {
    let mut rng = SeededRng::new(31);
    for instance in 0..20 {
        let (input, hidden, batch) = (3, 4, 2);
        let steps = 1 + instance % 4;
        let p = GruParams::<f64>::init(input, hidden, &mut rng);
        let x = rand_tensor(&[steps * batch, input], &mut rng, 1.0);
        let h0 = rand_tensor(&[batch, hidden], &mut rng, 0.5);
        let r = rand_tensor(&[steps * batch, hidden], &mut rng, 1.0);
        let (_, cache) = gru_forward_seq(&p.view(), &x, &h0, steps).unwrap();
        let g = gru_backward_seq(&p.view(), &cache, &r).unwrap();
        let loss = |p: &GruParams<f64>, x: &Tensor<f64>, h0: &Tensor<f64>| {
            dot(&gru_forward_seq(&p.view(), x, h0, steps).unwrap().0, &r)
        };
        let tol = 1e-5;
        for gate in 0..3 {
            check_tensor(&p.w[gate], &g.w[gate], tol, |t| {
                let mut q = p.clone();
                q.w[gate] = t.clone();
                loss(&q, &x, &h0)
            });
            check_tensor(&p.u[gate], &g.u[gate], tol, |t| {
                let mut q = p.clone();
                q.u[gate] = t.clone();
                loss(&q, &x, &h0)
            });
            check_tensor(&p.b[gate], &g.b[gate], tol, |t| {
                let mut q = p.clone();
                q.b[gate] = t.clone();
                loss(&q, &x, &h0)
            });
        }
        check_tensor(&x, &g.input, tol, |t| loss(&p, t, &h0));
        check_tensor(&h0, &g.h0, tol, |t| loss(&p, &x, t));
    }
}

#[test]
fn gru_cell_gradients_for_state_and_input() {
    let mut rng = SeededRng::new(32);
    let p = GruParams::<f64>::init(5, 3, &mut rng);
    let x = rand_tensor(&[1, 5], &mut rng, 1.0);
    let h = rand_tensor(&[1, 3], &mut rng, 1.0);
    let r = rand_tensor(&[1, 3], &mut rng, 1.0);
    let (_, cache) = gru_cell_forward(&p.view(), &x, &h).unwrap();
    let g = gru_cell_backward(&p.view(), &cache, &r).unwrap();
    check_tensor(&h, &g.h0, 1e-5, |t| dot(&gru_cell_forward(&p.view(), &x, t).unwrap().0, &r));
    check_tensor(&x, &g.input, 1e-5, |t| dot(&gru_cell_forward(&p.view(), t, &h).unwrap().0, &r));
}

#[test]
fn nll_gradient_matches_finite_differences() {
    let mut rng = SeededRng::new(41);
    for _ in 0..20 {
        let logits: Vec<f64> = (0..17).map(|_| rng.normal() * 2.0).collect();
        let target = rng.below(17);
        let (_, grad) = nll_from_logits(&logits, target).unwrap();
        let r = grad_check(|l: &[f64]| nll_from_logits(l, target).unwrap().0, &logits, &grad, H, 1e-6);
        assert!(r.passed, "{r:?}");
    }
}

#[test]
fn softmax_matches_naive_on_small_logits() {
    let mut rng = SeededRng::new(42);
    for _ in 0..50 {
        let v: Vec<f64> = (0..17).map(|_| rng.normal()).collect();
        let s = softmax(&Tensor::from_vec(v.clone()), 0).unwrap();
        let z: f64 = v.iter().map(|x| x.exp()).sum();
        for (a, x) in s.data().iter().zip(&v) {
            assert!((a - x.exp() / z).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn softmax_sums_to_one_and_is_shift_invariant(
        v in proptest::collection::vec(-50.0f64..50.0, 2..40),
        c in -100.0f64..100.0,
    ) {
        let s = softmax(&Tensor::from_vec(v.clone()), 0).unwrap();
        prop_assert!((s.data().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(s.data().iter().all(|&p| p >= 0.0 && p.is_finite()));
        let shifted = softmax(&Tensor::from_vec(v.iter().map(|x| x + c).collect()), 0).unwrap();
        prop_assert!(s.max_abs_diff(&shifted) < 1e-12);
    }
}

#[test]
fn conv_backward_matches_finite_differences() {
    let mut rng = SeededRng::new(51);
    for _ in 0..20 {
        let x = rand_tensor(&[2, 2, 6, 5], &mut rng, 1.0);
        let k = rand_tensor(&[3, 2, 3, 2], &mut rng, 0.5);
        let b = rand_tensor(&[3], &mut rng, 0.5);
        let (y, cache) = conv2d_forward(&x, &k, &b).unwrap();
        let r = rand_tensor(y.shape(), &mut rng, 1.0);
        let (dx, dk, db) = conv2d_backward(&cache, &k, &r).unwrap();
        let loss = |x: &Tensor<f64>, k: &Tensor<f64>, b: &Tensor<f64>| dot(&conv2d_forward(x, k, b).unwrap().0, &r);
        check_tensor(&x, &dx, 1e-4, |t| loss(t, &k, &b));
        check_tensor(&k, &dk, 1e-4, |t| loss(&x, t, &b));
        check_tensor(&b, &db, 1e-4, |t| loss(&x, &k, t));
    }
}

#[test]
fn maxpool_backward_matches_finite_differences() {
    let mut rng = SeededRng::new(52);
    for _ in 0..20 {
        let x = rand_tensor(&[2, 3, 5, 4], &mut rng, 1.0);
        let (y, cache) = maxpool2x2_forward(&x).unwrap();
        let r = rand_tensor(y.shape(), &mut rng, 1.0);
        let dx = maxpool2x2_backward(&cache, &r).unwrap();
        check_tensor(&x, &dx, 1e-4, |t| dot(&maxpool2x2_forward(t).unwrap().0, &r));
    }
}

#[test]
fn batchnorm_backward_matches_finite_differences() {
    let mut rng = SeededRng::new(53);
    for i in 0..20 {
        let mode = if i % 4 == 3 { BatchNormMode::Infer } else { BatchNormMode::Train };
        let x = rand_tensor(&[3, 2, 3, 3], &mut rng, 2.0);
        let gamma = rand_tensor(&[2], &mut rng, 1.0);
        let beta = rand_tensor(&[2], &mut rng, 1.0);
        let mut stats = BatchNormStats::new(2);
        stats.mean = vec![0.3, -0.2];
        stats.var = vec![1.5, 0.7];
        let fresh = stats.clone();
        let (y, cache) = batchnorm_forward(&x, &gamma, &beta, &mut stats, mode).unwrap();
        let r = rand_tensor(y.shape(), &mut rng, 1.0);
        let (dx, dg, db) = batchnorm_backward(&cache, &gamma, &r).unwrap();
        let loss = |x: &Tensor<f64>, g: &Tensor<f64>, b: &Tensor<f64>| {
            let mut s = fresh.clone();
            dot(&batchnorm_forward(x, g, b, &mut s, mode).unwrap().0, &r)
        };
        check_tensor(&x, &dx, 1e-4, |t| loss(t, &gamma, &beta));
        check_tensor(&gamma, &dg, 1e-4, |t| loss(&x, t, &beta));
        check_tensor(&beta, &db, 1e-4, |t| loss(&x, &gamma, t));
    }
}

#[test]
fn forward_and_backward_stay_finite() {
    let mut rng = SeededRng::new(61);
    let p = GruParams::<f64>::init(34, 16, &mut rng);
    let x = rand_tensor(&[50 * 4, 34], &mut rng, 10.0);
    let (h, cache) = gru_forward_seq(&p.view(), &x, &Tensor::zeros(&[4, 16]), 50).unwrap();
    assert!(h.all_finite());
    let g = gru_backward_seq(&p.view(), &cache, &Tensor::full(h.shape(), 1.0)).unwrap();
    assert!(g.input.all_finite() && g.h0.all_finite());
}

#[test]
fn f32_path_agrees_with_f64() {
    let mut rng = SeededRng::new(62);
    let p64 = GruParams::<f64>::init(3, 4, &mut rng);
    let cast = |t: &Tensor<f64>| {
        Tensor::<f32>::new(t.shape().to_vec(), t.data().iter().map(|&v| v as f32).collect()).unwrap()
    };
    let p32 = GruParams::<f32> {
        w: p64.w.each_ref().map(cast),
        u: p64.u.each_ref().map(cast),
        b: p64.b.each_ref().map(cast),
    };
    let x = rand_tensor(&[6, 3], &mut rng, 1.0);
    let (h64, _) = gru_forward_seq(&p64.view(), &x, &Tensor::zeros(&[2, 4]), 3).unwrap();
    let (h32, _) = gru_forward_seq(&p32.view(), &cast(&x), &Tensor::zeros(&[2, 4]), 3).unwrap();
    for (a, b) in h64.data().iter().zip(h32.data()) {
        assert!((a - *b as f64).abs() < 1e-5);
    }
}
