use hwstyle::codec::{encode_tracing, fit_quantizer, EncodedTracing, QuantizerSpec, CLASSES, EOS};
use hwstyle::dataset::{synth_corpus, LetterSample, SynthConfig};
use hwstyle::generator::*;
use hwstyle::numerics::gradcheck::relative_error;
use hwstyle::numerics::{softmax_in_place, SeededRng};
use hwstyle::styles::{letter_bias, BiasKind, BiasVector};
use hwstyle::Error;

fn corpus(seed: u64) -> (QuantizerSpec, Vec<LetterSample>) {
    let samples = synth_corpus(&SynthConfig {
        alphabet: "ABCDE".into(),
        n_writers: 4,
        reps_per_writer: 2,
        seed,
    })
    .unwrap();
    let q = fit_quantizer(samples.iter().map(|s| &s.trajectory)).unwrap();
    (q, samples)
}

fn examples(q: &QuantizerSpec, samples: &[LetterSample]) -> Vec<TrainingExample> {
    samples
        .iter()
        .map(|s| TrainingExample {
            bias: letter_bias(s.letter()).unwrap(),
            tracing: encode_tracing(&s.trajectory, q).unwrap(),
        })
        .collect()
}

fn small_config(layers: usize, hidden: usize, seed: u64) -> GeneratorConfig {
    GeneratorConfig {
        hidden_layers: layers,
        hidden_size: hidden,
        bias_hidden: 8,
        seed,
        ..GeneratorConfig::default()
    }
}

fn toy_model(dropout: f64) -> Generator64 {
    let (q, _) = corpus(1);
    let cfg = GeneratorConfig {
        dropout,
        bias_hidden: 3,
        ..small_config(2, 4, 7)
    };
    GeneratorModel::new(cfg, BiasKind::External, 5, q).unwrap()
}

type Generator64 = GeneratorModel<f64>;

fn toy_batch() -> Batch<f64> {
    let a = EncodedTracing::from_codes(&[3, 4], &[1, 15]).unwrap();
    let b = EncodedTracing::from_codes(&[9], &[0]).unwrap();
    Batch::new(&[(&[0.5, -1.0, 0.2, 0.0, 1.5][..], &a), (&[1.0, 0.3, -0.7, 0.9, -0.2][..], &b)]).unwrap()
}

fn loss_with(model: &Generator64, batch: &Batch<f64>, dropout: Option<&SeededRng>) -> f64 {
    let mut m = model.clone();
    let mut rng = dropout.cloned();
    let l = m.accumulate_gradients(batch, rng.as_mut()).unwrap().total;
    m.params.zero_grads();
    l
}

fn check_bptt(dropout: f64) {
    let mut model = toy_model(dropout);
    let batch = toy_batch();
    assert_eq!(batch.steps, 3);
    let rng = SeededRng::new(99);
    let mut analytic = model.clone();
    analytic.accumulate_gradients(&batch, Some(&mut rng.clone())).unwrap();
    // five-point stencil: the summed loss is O(10), so a plain central
    // difference at h = 1e-5 carries ~1e-10 of roundoff
    let h = 1e-3;
    let names: Vec<String> = model.params.names().map(String::from).collect();
    assert_eq!(names.len(), 4 + 2 + 2 * 9);
    for name in names {
        let grad = analytic.params.grad(&name).unwrap().clone();
        let mut worst: f64 = 0.0;
        for i in 0..grad.len() {
            let orig = model.params.value(&name).unwrap().data()[i];
            let mut at = |dx: f64| {
                model.params.value_mut(&name).unwrap().data_mut()[i] = orig + dx;
                let l = loss_with(&model, &batch, Some(&rng));
                model.params.value_mut(&name).unwrap().data_mut()[i] = orig;
                l
            };
            let numeric = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
            worst = worst.max(relative_error(grad.data()[i], numeric));
        }
        assert!(worst < 1e-5, "{name}: {worst}");
    }
}

#[test]
fn bptt_matches_finite_differences() {
    check_bptt(0.0);
}

#[test]
fn bptt_with_dropout_mask_matches_finite_differences() {
    check_bptt(0.3);
}

#[test]
fn padding_content_is_ignored() {
    let model = toy_model(0.0);
    let clean = toy_batch();
    let mut noisy = clean.clone();
    let mut rng = SeededRng::new(3);
    for row in 0..noisy.mask.len() {
        if !noisy.mask[row] {
            noisy.targets[row] = (rng.below(17) as u8, rng.below(17) as u8);
            for v in &mut noisy.inputs.data_mut()[row * 34..(row + 1) * 34] {
                *v = rng.normal();
            }
        }
    }
    let (mut a, mut b) = (model.clone(), model.clone());
    let la = a.accumulate_gradients(&clean, None).unwrap();
    let lb = b.accumulate_gradients(&noisy, None).unwrap();
    assert_eq!(la, lb);
    for (name, p) in a.params.iter() {
        assert_eq!(p.grad, b.params.grad(name).unwrap().clone(), "{name}");
    }
    // the short sequence alone gives the same loss as its share of the padded batch
    let short = EncodedTracing::from_codes(&[9], &[0]).unwrap();
    let solo = Batch::new(&[(&[1.0, 0.3, -0.7, 0.9, -0.2][..], &short)]).unwrap();
    let long = EncodedTracing::from_codes(&[3, 4], &[1, 15]).unwrap();
    let first = Batch::new(&[(&[0.5, -1.0, 0.2, 0.0, 1.5][..], &long)]).unwrap();
    let sum = model.batch_loss(&solo).unwrap().total + model.batch_loss(&first).unwrap().total;
    assert!((sum - la.total).abs() < 1e-12);
}

#[test]
fn teacher_forced_shapes_and_loss() {
    let (q, samples) = corpus(2);
    let model = GeneratorModel::<f64>::new(small_config(2, 16, 1), BiasKind::Letter, 26, q.clone()).unwrap();
    let bias = letter_bias('B').unwrap();
    let eos_only = EncodedTracing::from_codes(&[], &[]).unwrap();
    assert_eq!(model.forward_teacher_forced(&bias, &eos_only).unwrap().shape(), [1, 34]);
    let mut per_step = Vec::new();
    for s in &samples {
        let enc = encode_tracing(&s.trajectory, &q).unwrap();
        let logits = model.forward_teacher_forced(&letter_bias(s.letter()).unwrap(), &enc).unwrap();
        assert_eq!(logits.rows(), enc.len());
        per_step.push(sequence_loss(&logits, &enc).unwrap() / enc.len() as f64);
    }
    let mean = per_step.iter().sum::<f64>() / per_step.len() as f64;
    assert!((mean - 2.0 * 17f64.ln()).abs() < 0.5, "{mean}");
    let logits = model.forward_teacher_forced(&bias, &eos_only).unwrap();
    let two = EncodedTracing::from_codes(&[1], &[1]).unwrap();
    assert!(matches!(sequence_loss(&logits, &two), Err(Error::Shape { .. })));
}

#[test]
fn uniform_and_confident_logits() {
    let enc = EncodedTracing::from_codes(&[1, 2, 3], &[4, 5, 6]).unwrap();
    let zeros = hwstyle::Tensor::zeros(&[4, 34]);
    assert!((sequence_loss(&zeros, &enc).unwrap() - 4.0 * 2.0 * 17f64.ln()).abs() < 1e-12);
    let mut sharp = hwstyle::Tensor::zeros(&[4, 34]);
    for (t, f) in enc.frames().iter().enumerate() {
        sharp.data_mut()[t * 34 + f.direction as usize] = 60.0;
        sharp.data_mut()[t * 34 + CLASSES + f.speed as usize] = 60.0;
    }
    assert!(sequence_loss(&sharp, &enc).unwrap() < 1e-20);
}

#[test]
fn bias_projection_contract() {
    let (q, _) = corpus(1);
    let mut m = GeneratorModel::<f64>::new(small_config(1, 8, 0), BiasKind::LetterWriter, 46, q).unwrap();
    let b = BiasVector::new(BiasKind::LetterWriter, vec![0.5; 46], Default::default()).unwrap();
    assert_eq!(m.bias_project(&b).unwrap().len(), 34);
    let short = letter_bias('A').unwrap();
    assert!(matches!(m.bias_project(&short), Err(Error::BiasDimension { expected: 46, actual: 26 })));
    for name in ["bias.w1", "bias.b1", "bias.w2", "bias.b2"] {
        m.params.value_mut(name).unwrap().fill(0.0);
    }
    assert!(m.bias_project(&b).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn training_is_deterministic_and_lr_zero_freezes() {
    let (q, samples) = corpus(3);
    let ex = examples(&q, &samples);
    let opts = TrainOptions {
        epochs: 2,
        batch_size: 8,
        checkpoint: None,
    };
    let run = |lr: f64| {
        let cfg = GeneratorConfig { lr, ..small_config(2, 12, 5) };
        let mut m = GeneratorModel::<f64>::new(cfg, BiasKind::Letter, 26, q.clone()).unwrap();
        let r = m.train(&ex[..30], &ex[30..], &opts).unwrap();
        (m, r)
    };
    let (m1, r1) = run(1e-3);
    let (m2, r2) = run(1e-3);
    assert_eq!(r1.epochs, r2.epochs);
    assert_eq!(m1.to_bytes(), m2.to_bytes());
    assert!(r1.epochs.iter().all(|e| e.train_loss.is_finite() && e.val_loss.unwrap().is_finite()));
    assert_eq!(r1.epochs.iter().map(|e| e.epoch).collect::<Vec<_>>(), [0, 1]);

    let (frozen, _) = run(0.0);
    let fresh = GeneratorModel::<f64>::new(GeneratorConfig { lr: 0.0, ..small_config(2, 12, 5) }, BiasKind::Letter, 26, q.clone()).unwrap();
    for (name, p) in frozen.params.iter() {
        assert_eq!(p.value, fresh.params.value(name).unwrap().clone(), "{name}");
    }
}

#[test]
fn bias_kind_mismatch_is_rejected() {
    let (q, samples) = corpus(1);
    let ex = examples(&q, &samples);
    let mut m = GeneratorModel::<f64>::new(small_config(1, 8, 0), BiasKind::LetterWriter, 26, q).unwrap();
    let err = m.train(&ex, &[], &TrainOptions::default()).unwrap_err();
    assert!(matches!(err, Error::BiasKind { .. }), "{err}");
}

#[test]
fn sampling_contract() {
    let (q, _) = corpus(1);
    let m = GeneratorModel::<f64>::new(small_config(2, 16, 3), BiasKind::Letter, 26, q).unwrap();
    let b = letter_bias('C').unwrap();
    let greedy = |seed| m.sample(&b, 1e-9, &mut SeededRng::new(seed)).unwrap();
    assert_eq!(greedy(1), greedy(2));
    let s1 = m.sample(&b, 1.0, &mut SeededRng::new(4)).unwrap();
    assert_eq!(s1, m.sample(&b, 1.0, &mut SeededRng::new(4)).unwrap());
    let mut rng = SeededRng::new(5);
    for _ in 0..50 {
        let s = m.sample(&b, 1.5, &mut rng).unwrap();
        assert!(s.len() <= 100);
        assert!(s.content().iter().all(|f| f.direction < EOS && f.speed < EOS));
    }
}

#[test]
fn first_step_frequencies_follow_softmax() {
    let (q, _) = corpus(1);
    let m = GeneratorModel::<f64>::new(small_config(1, 16, 8), BiasKind::Letter, 26, q).unwrap();
    let b = letter_bias('D').unwrap();
    let logits = m.forward_teacher_forced(&b, &EncodedTracing::from_codes(&[], &[]).unwrap()).unwrap();
    let mut p = logits.row(0)[..CLASSES].to_vec();
    softmax_in_place(&mut p);
    let n = 500;
    let mut counts = [0usize; CLASSES];
    let mut rng = SeededRng::new(17);
    for _ in 0..n {
        let s = m.sample(&b, 1.0, &mut rng).unwrap();
        counts[s.frames()[0].direction as usize] += 1;
    }
    for k in 0..CLASSES {
        let expect = n as f64 * p[k];
        let sigma = (n as f64 * p[k] * (1.0 - p[k])).sqrt();
        assert!((counts[k] as f64 - expect).abs() <= 3.0 * sigma, "class {k}: {} vs {expect:.1}", counts[k]);
    }
}

#[test]
fn checkpoint_round_trip() {
    let (q, samples) = corpus(4);
    let ex = examples(&q, &samples);
    let mut m = GeneratorModel::<f64>::new(small_config(2, 8, 2), BiasKind::Letter, 26, q).unwrap();
    m.corpus_seed = 4;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gen.ckpt");
    m.train(&ex, &[], &TrainOptions { epochs: 1, batch_size: 16, checkpoint: Some(path.clone()) }).unwrap();
    let back = GeneratorModel::<f64>::load_checkpoint(&path).unwrap();
    assert_eq!(back.to_bytes(), m.to_bytes());
    assert_eq!(back.params.step_count(), m.params.step_count());
    assert_eq!((back.corpus_seed, back.bias_kind), (4, BiasKind::Letter));

    let bytes = m.to_bytes();
    assert!(matches!(GeneratorModel::<f64>::from_bytes(&bytes[..bytes.len() - 3]), Err(Error::Format(_))));
    assert!(matches!(GeneratorModel::<f64>::from_bytes(b"garbage!"), Err(Error::Format(_))));
    assert!(matches!(GeneratorModel::<f32>::from_bytes(&bytes), Err(Error::Format(_))));
    let m32 = GeneratorModel::<f32>::new(small_config(1, 4, 2), BiasKind::Letter, 26, back.quantizer.clone()).unwrap();
    assert_eq!(GeneratorModel::<f32>::from_bytes(&m32.to_bytes()).unwrap().to_bytes(), m32.to_bytes());
}

#[test]
fn single_precision_tracks_double() {
    let (q, samples) = corpus(5);
    let ex = examples(&q, &samples);
    let opts = TrainOptions { epochs: 3, batch_size: 10, checkpoint: None };
    let mut a = GeneratorModel::<f64>::new(small_config(1, 16, 9), BiasKind::Letter, 26, q.clone()).unwrap();
    let mut b = GeneratorModel::<f32>::new(small_config(1, 16, 9), BiasKind::Letter, 26, q).unwrap();
    let ra = a.train(&ex, &[], &opts).unwrap();
    let rb = b.train(&ex, &[], &opts).unwrap();
    for (x, y) in ra.epochs.iter().zip(&rb.epochs) {
        assert!((x.train_loss_per_step - y.train_loss_per_step).abs() < 1e-3);
    }
    assert!(ra.final_loss() < ra.initial_loss);
}
