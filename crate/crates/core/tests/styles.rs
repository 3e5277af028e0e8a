use hwstyle::dataset::{rasterize, synth_corpus, LetterSample, Raster, SynthConfig};
use hwstyle::numerics::{grad_check_at, BatchNormMode, SeededRng, Tensor};
use hwstyle::styles::{
    build_embedding_table, raster_batch, Autoencoder, AutoencoderConfig, BiasKind, ClassifierConfig, LetterClassifier,
    StyleModels,
};

fn corpus(alphabet: &str, writers: usize, reps: usize, seed: u64) -> Vec<LetterSample> {
    let mut s = synth_corpus(&SynthConfig {
        alphabet: alphabet.into(),
        n_writers: writers,
        reps_per_writer: reps,
        seed,
    })
    .unwrap();
    for x in &mut s {
        x.ensure_raster();
    }
    s
}

fn rasters(samples: &[LetterSample]) -> Vec<&Raster> {
    samples.iter().map(|s| s.raster.as_ref().unwrap()).collect()
}

/// Indices to probe in a tensor of `len` values: all of them when small.
fn probe(len: usize, rng: &mut SeededRng) -> Vec<usize> {
    if len <= 24 {
        (0..len).collect()
    } else {
        (0..24).map(|_| rng.below(len)).collect()
    }
}

#[test]
fn classifier_gradients_match_finite_differences() {
    let samples = corpus("OIL", 1, 1, 3);
    let images = raster_batch::<f64>(&rasters(&samples)).unwrap();
    let labels = [14, 8, 11];
    let mut model = LetterClassifier::<f64>::new(ClassifierConfig {
        embedding_dim: 6,
        ..ClassifierConfig::default()
    })
    .unwrap();
    model.params.zero_grads();
    model.loss_and_gradients(&images, &labels).unwrap();
    let mut rng = SeededRng::new(1);
    let names: Vec<String> = model.params.names().map(String::from).collect();
    for name in names {
        let value = model.params.value(&name).unwrap().clone();
        let grad = model.params.grad(&name).unwrap().data().to_vec();
        let idx = probe(value.len(), &mut rng);
        let mut m = model.clone();
        let report = grad_check_at(
            |x: &[f64]| {
                *m.params.value_mut(&name).unwrap() = Tensor::new(value.shape().to_vec(), x.to_vec()).unwrap();
                m.loss(&images, &labels, BatchNormMode::Train).unwrap()
            },
            value.data(),
            &grad,
            &idx,
            1e-5,
            1e-4,
        );
        assert!(report.passed, "{name}: {report:?}");
    }
}

#[test]
fn classifier_separates_two_letters() {
    let samples = corpus("IO", 24, 2, 5);
    let letters: Vec<char> = samples.iter().map(|s| s.letter()).collect();
    let mut model = LetterClassifier::<f64>::new(ClassifierConfig {
        embedding_dim: 64,
        epochs: 8,
        batch_size: 8,
        ..ClassifierConfig::default()
    })
    .unwrap();
    let report = model.train(&rasters(&samples), &letters).unwrap();
    assert_eq!(report.train_accuracy, 1.0, "{report:?}");
    assert!(report.epoch_losses.last() < report.epoch_losses.first());
}

#[test]
fn untrained_models_refuse_to_embed() {
    let r = Raster::blank();
    assert!(LetterClassifier::<f64>::new(ClassifierConfig::default()).unwrap().embedding(&r).is_err());
    assert!(Autoencoder::<f64>::new(AutoencoderConfig::default()).unwrap().latent(&r).is_err());
}

fn flat(rs: &[&Raster]) -> Tensor<f64> {
    let data = rs.iter().flat_map(|r| r.pixels().to_vec()).collect();
    Tensor::new(vec![rs.len(), 784], data).unwrap()
}

#[test]
fn autoencoder_gradients_match_finite_differences() {
    let samples = corpus("AX", 1, 1, 2);
    let x = flat(&rasters(&samples));
    let mut model = Autoencoder::<f64>::new(AutoencoderConfig {
        hidden: 10,
        latent: 4,
        ..AutoencoderConfig::default()
    })
    .unwrap();
    model.params.zero_grads();
    model.loss_and_gradients(&x).unwrap();
    let mut rng = SeededRng::new(2);
    let names: Vec<String> = model.params.names().map(String::from).collect();
    for name in names {
        let value = model.params.value(&name).unwrap().clone();
        let grad = model.params.grad(&name).unwrap().data().to_vec();
        let idx = probe(value.len(), &mut rng);
        let mut m = model.clone();
        let report = grad_check_at(
            |v: &[f64]| {
                *m.params.value_mut(&name).unwrap() = Tensor::new(value.shape().to_vec(), v.to_vec()).unwrap();
                m.loss(&x).unwrap()
            },
            value.data(),
            &grad,
            &idx,
            1e-5,
            1e-5,
        );
        assert!(report.passed, "{name}: {report:?}");
    }
}

#[test]
fn autoencoder_memorizes_a_few_images() {
    let samples = corpus("OX", 1, 1, 4);
    let rs = rasters(&samples);
    let mut model = Autoencoder::<f64>::new(AutoencoderConfig {
        hidden: 64,
        latent: 8,
        epochs: 400,
        batch_size: 2,
        lr: 3e-3,
        ..AutoencoderConfig::default()
    })
    .unwrap();
    let losses = model.train(&rs).unwrap();
    let mse = model.reconstruction_error(&rs).unwrap();
    assert!(mse < 1e-3, "mse {mse}, first epoch {}", losses[0]);
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (n(a) * n(b)).max(1e-12)
}

#[test]
fn image_embeddings_are_deterministic_and_letter_aware() {
    let samples = corpus("ABCDE", 6, 2, 8);
    let letters: Vec<char> = samples.iter().map(|s| s.letter()).collect();
    let cfg = ClassifierConfig {
        embedding_dim: 16,
        epochs: 4,
        batch_size: 8,
        seed: 3,
        ..ClassifierConfig::default()
    };
    let train = |cfg: &ClassifierConfig| {
        let mut m = LetterClassifier::<f64>::new(cfg.clone()).unwrap();
        m.train(&rasters(&samples), &letters).unwrap();
        m
    };
    let (a, b) = (train(&cfg), train(&cfg));
    let models = |m| StyleModels {
        classifier: Some(m),
        autoencoder: None,
    };
    let ta = build_embedding_table(BiasKind::ClassifierEmbedding, &samples, models(&a), 0).unwrap();
    let tb = build_embedding_table(BiasKind::ClassifierEmbedding, &samples, models(&b), 0).unwrap();
    assert_eq!(ta, tb);
    assert_eq!((ta.len(), ta.dim), (samples.len(), 16));

    let emb: Vec<Vec<f64>> = samples.iter().map(|s| ta.get(&s.id).unwrap().to_vec()).collect();
    let (mut same, mut diff) = ((0.0, 0), (0.0, 0));
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let c = cosine(&emb[i], &emb[j]);
            if letters[i] == letters[j] {
                same = (same.0 + c, same.1 + 1);
            } else {
                diff = (diff.0 + c, diff.1 + 1);
            }
        }
    }
    let (same, diff) = (same.0 / same.1 as f64, diff.0 / diff.1 as f64);
    assert!(same > diff, "same-letter cosine {same} vs cross-letter {diff}");
}

#[test]
fn autoencoder_latent_distinguishes_blank_from_letter() {
    let samples = corpus("AO", 3, 1, 6);
    let mut model = Autoencoder::<f64>::new(AutoencoderConfig {
        hidden: 32,
        latent: 6,
        epochs: 3,
        ..AutoencoderConfig::default()
    })
    .unwrap();
    model.train(&rasters(&samples)).unwrap();
    let letter = model.latent(&rasterize(&samples[0].trajectory)).unwrap();
    let blank = model.latent(&Raster::blank()).unwrap();
    assert_eq!(letter.len(), 6);
    assert!(letter.iter().zip(&blank).any(|(a, b)| (a - b).abs() > 1e-6));
    assert_eq!(letter, model.latent(&rasterize(&samples[0].trajectory)).unwrap());
}
