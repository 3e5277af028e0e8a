use std::collections::{BTreeMap, HashMap};
use std::fs;

use serde::{Deserialize, Serialize};

use crate::codec::{decode_tracing, encode_tracing, fit_quantizer, EncodedTracing, QuantizerSpec, Trajectory, DEFAULT_DT};
use crate::dataset::{
    clean, load_jsonl, split, synth_corpus, write_jsonl, CleanReport, CorpusManifest, LetterSample, LoadReport,
    Raster, Split,
};
use crate::error::{Error, Result};
use crate::eval::{
    eos_analysis, render_report, wilcoxon_signed_rank, BleuReport, BrevityMode, EosReport, EvalReport, Modality,
    ModalityBleu, PairedCorpus, ReportFormat,
};
use crate::generator::{GeneratorModel, TrainReport, TrainingExample};
use crate::numerics::{stream_key, SeededRng};
use crate::pipeline::files::{read_jsonl, to_json_pretty, to_jsonl, EncodedRecord, GeneratedRecord, StageOutput};
use crate::pipeline::svg;
use crate::pipeline::{derive_seed, RunConfig};
use crate::styles::{
    build_embedding_table, letter_writer_key, Autoencoder, BiasKind, EmbeddingTable, LetterClassifier, StyleModels,
};

const CORPUS: (&str, &str) = ("corpus", "corpus");
const DATA: (&str, &str) = ("data", "data");
const SAMPLES_FILE: &str = "corpus/samples.jsonl";
const ENCODED_FILE: &str = "data/encoded.jsonl";
const QUANTIZER_FILE: &str = "data/quantizer.txt";

/// Counts written by `preprocess`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessSummary {
    pub loaded: usize,
    pub rejected: usize,
    pub clean: CleanReport,
    pub splits: BTreeMap<String, usize>,
}

/// Training summary of an image bias model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StylesSummary {
    pub kind: BiasKind,
    pub entries: usize,
    pub dim: usize,
    pub epoch_losses: Vec<f64>,
    /// Split name to classification accuracy or reconstruction error.
    pub metrics: BTreeMap<String, f64>,
}

/// Samples of the preprocessed dataset, with splits, plus the quantizer.
pub struct Dataset {
    pub samples: Vec<LetterSample>,
    pub encoded: HashMap<String, EncodedTracing>,
    pub quantizer: QuantizerSpec,
}

impl Dataset {
    pub fn of_split(&self, which: Split) -> impl Iterator<Item = &LetterSample> {
        self.samples.iter().filter(move |s| s.split == which)
    }
}

/// `synth`: writes `corpus/samples.jsonl` and `corpus/manifest.json`, either
/// synthesized or ingested from `corpus.input`.
pub fn synth(cfg: &RunConfig) -> Result<usize> {
    let cfg = cfg.resolved()?;
    let mut out = StageOutput::begin(&cfg, "synth", CORPUS.0, CORPUS.1)?;
    let (samples, manifest) = match &cfg.corpus.input {
        Some(path) => {
            out.external_input(path)?;
            let (samples, report) = load_jsonl(path)?;
            for r in &report.rejected {
                log::warn!("{}:{}: {}", path.display(), r.line, r.reason);
            }
            let manifest = to_json_pretty(&IngestManifest {
                source: path.to_string_lossy().into_owned(),
                samples: samples.len(),
                load: report,
            });
            (samples, manifest)
        }
        None => {
            let samples = synth_corpus(&cfg.synth_config())?;
            let manifest = to_json_pretty(&CorpusManifest::new(&cfg.synth_config(), &samples));
            (samples, manifest)
        }
    };
    let mut jsonl = Vec::new();
    write_jsonl(&samples, &mut jsonl)?;
    out.write("samples.jsonl", &jsonl)?;
    out.write("manifest.json", &manifest)?;
    out.commit()?;
    log::info!("corpus: {} samples", samples.len());
    Ok(samples.len())
}

#[derive(Debug, Serialize)]
struct IngestManifest {
    source: String,
    samples: usize,
    load: LoadReport,
}

/// `preprocess`: cleaning, split, quantizer fit on the training split, encoding.
pub fn preprocess(cfg: &RunConfig) -> Result<PreprocessSummary> {
    let cfg = cfg.resolved()?;
    let mut out = StageOutput::begin(&cfg, "preprocess", DATA.0, DATA.1)?;
    out.require(CORPUS.0, CORPUS.1)?;
    let (samples, load) = load_jsonl(cfg.out_dir.join(SAMPLES_FILE))?;
    let (kept, clean_report) = clean(samples, &cfg.clean_config());
    let tagged = split(kept, cfg.codec.split, derive_seed(cfg.seed, "split"), cfg.codec.stratify_by)?;
    let quantizer = fit_quantizer(tagged.iter().filter(|s| s.split == Split::Train).map(|s| &s.trajectory))?;
    let mut records = Vec::with_capacity(tagged.len());
    let mut splits = BTreeMap::new();
    for s in &tagged {
        let enc = encode_tracing(&s.trajectory, &quantizer)?;
        *splits.entry(s.split.as_str().to_string()).or_insert(0) += 1;
        records.push(EncodedRecord {
            id: s.id.clone(),
            writer_id: s.writer_id().to_string(),
            letter: s.letter().to_string(),
            split: s.split,
            directions: enc.direction_codes(),
            speeds: enc.speed_codes(),
        });
    }
    let summary = PreprocessSummary {
        loaded: load.accepted,
        rejected: load.rejected.len(),
        clean: clean_report,
        splits,
    };
    out.write("encoded.jsonl", &to_jsonl(&records))?;
    out.write("quantizer.txt", quantizer.to_text().as_bytes())?;
    out.write("summary.json", &to_json_pretty(&summary))?;
    out.commit()?;
    Ok(summary)
}

/// Rebuilds the tagged samples from the corpus and the encoded records.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let (samples, _) = load_jsonl(cfg.out_dir.join(SAMPLES_FILE))?;
    let records: Vec<EncodedRecord> = read_jsonl(&cfg.out_dir.join(ENCODED_FILE))?;
    let mut by_id: HashMap<String, EncodedRecord> = records.into_iter().map(|r| (r.id.clone(), r)).collect();
    let mut kept = Vec::with_capacity(by_id.len());
    let mut encoded = HashMap::with_capacity(by_id.len());
    for mut s in samples {
        if let Some(r) = by_id.remove(&s.id) {
            if r.letter != s.letter().to_string() || r.writer_id != s.writer_id() {
                return Err(Error::Format(format!("encoded record {} does not match the corpus", r.id)));
            }
            s.split = r.split;
            encoded.insert(r.id.clone(), r.tracing()?);
            kept.push(s);
        }
    }
    if let Some(id) = by_id.keys().min() {
        return Err(Error::Format(format!("encoded record {id} has no corpus sample")));
    }
    let qpath = cfg.out_dir.join(QUANTIZER_FILE);
    let quantizer = QuantizerSpec::from_text(&fs::read_to_string(&qpath).map_err(|e| Error::io(&qpath, e))?)?;
    Ok(Dataset {
        samples: kept,
        encoded,
        quantizer,
    })
}

fn table_file(kind: BiasKind) -> String {
    format!("{}.table", kind.as_str())
}

fn split_rasters(samples: &[LetterSample], which: Split) -> (Vec<&Raster>, Vec<char>) {
    samples
        .iter()
        .filter(|s| s.split == which)
        .map(|s| (s.raster.as_ref().expect("rasterized"), s.letter()))
        .unzip()
}

/// `train-styles`: builds the embedding table of `kind`, training the image
/// model first when the kind needs one.
pub fn train_styles(cfg: &RunConfig, kind: BiasKind) -> Result<StylesSummary> {
    let cfg = cfg.resolved()?;
    let mut out = StageOutput::begin(&cfg, "train-styles", "styles", kind.as_str())?;
    out.require(CORPUS.0, CORPUS.1)?;
    out.require(DATA.0, DATA.1)?;
    let mut data = load_dataset(&cfg)?;
    let mut metrics = BTreeMap::new();
    let mut epoch_losses = Vec::new();
    let table = match kind {
        BiasKind::Letter | BiasKind::LetterWriter => {
            build_embedding_table::<f64>(kind, &data.samples, StyleModels::default(), cfg.seed)?
        }
        BiasKind::ClassifierEmbedding => {
            for s in &mut data.samples {
                s.ensure_raster();
            }
            let mut model = LetterClassifier::<f64>::new(cfg.styles.classifier.clone())?;
            let (imgs, letters) = split_rasters(&data.samples, Split::Train);
            epoch_losses = model.train(&imgs, &letters)?.epoch_losses;
            for which in [Split::Train, Split::Validation, Split::Test] {
                let (imgs, letters) = split_rasters(&data.samples, which);
                if !imgs.is_empty() {
                    metrics.insert(format!("{}_accuracy", which.as_str()), model.accuracy(&imgs, &letters)?);
                }
            }
            let models = StyleModels {
                classifier: Some(&model),
                autoencoder: None,
            };
            build_embedding_table(kind, &data.samples, models, cfg.seed)?
        }
        BiasKind::AutoencoderLatent => {
            for s in &mut data.samples {
                s.ensure_raster();
            }
            let mut model = Autoencoder::<f64>::new(cfg.styles.autoencoder.clone())?;
            let (imgs, _) = split_rasters(&data.samples, Split::Train);
            epoch_losses = model.train(&imgs)?;
            for which in [Split::Train, Split::Validation, Split::Test] {
                let (imgs, _) = split_rasters(&data.samples, which);
                if !imgs.is_empty() {
                    metrics.insert(format!("{}_mse", which.as_str()), model.reconstruction_error(&imgs)?);
                }
            }
            let models = StyleModels {
                classifier: None,
                autoencoder: Some(&model),
            };
            build_embedding_table(kind, &data.samples, models, cfg.seed)?
        }
        BiasKind::External => {
            let path = cfg
                .styles
                .external
                .clone()
                .ok_or_else(|| Error::Config("styles.external is not set".into()))?;
            out.external_input(&path)?;
            let table = EmbeddingTable::load(&path)?;
            for s in &data.samples {
                table.bias_for(s)?;
            }
            table
        }
    };
    let summary = StylesSummary {
        kind,
        entries: table.len(),
        dim: table.dim,
        epoch_losses,
        metrics,
    };
    out.write(&table_file(kind), table.to_text().as_bytes())?;
    out.write(&format!("{}.summary.json", kind.as_str()), &to_json_pretty(&summary))?;
    out.commit()?;
    Ok(summary)
}

fn examples(data: &Dataset, table: &EmbeddingTable, which: Split) -> Result<Vec<TrainingExample>> {
    data.of_split(which)
        .map(|s| {
            Ok(TrainingExample {
                bias: table.bias_for(s)?,
                tracing: data.encoded[&s.id].clone(),
            })
        })
        .collect()
}

fn load_table(cfg: &RunConfig, kind: BiasKind) -> Result<EmbeddingTable> {
    let table = EmbeddingTable::load(cfg.out_dir.join("styles").join(table_file(kind)))?;
    if table.kind != kind {
        return Err(Error::BiasKind {
            expected: kind.to_string(),
            actual: table.kind.to_string(),
        });
    }
    Ok(table)
}

fn checkpoint_file(kind: BiasKind) -> String {
    format!("{}.ckpt", kind.as_str())
}

/// `train-generator`: teacher-forced training on the training split, with
/// the validation split monitored.
pub fn train_generator(cfg: &RunConfig, kind: BiasKind) -> Result<TrainReport> {
    let cfg = cfg.resolved()?;
    let mut out = StageOutput::begin(&cfg, "train-generator", "models", kind.as_str())?;
    out.require(CORPUS.0, CORPUS.1)?;
    out.require(DATA.0, DATA.1)?;
    out.require("styles", kind.as_str())?;
    let data = load_dataset(&cfg)?;
    let table = load_table(&cfg, kind)?;
    let train = examples(&data, &table, Split::Train)?;
    let validation = examples(&data, &table, Split::Validation)?;
    let mut model = GeneratorModel::<f64>::new(cfg.generator_config(), kind, table.dim, data.quantizer.clone())?;
    model.corpus_seed = cfg.seed;
    log::info!(
        "training {kind} generator: {} parameters, {} train / {} validation tracings",
        model.parameter_count(),
        train.len(),
        validation.len()
    );
    let report = model.train(&train, &validation, &cfg.train_options())?;
    log::info!("{kind} generator trained in {:.1} s", report.wall_time_secs);
    out.write(&checkpoint_file(kind), &model.to_bytes())?;
    out.write(&format!("{}.train.json", kind.as_str()), &to_json_pretty(&report))?;
    out.commit()?;
    Ok(report)
}

fn bias_key(kind: BiasKind, s: &LetterSample) -> String {
    match kind {
        BiasKind::Letter => s.letter().to_string(),
        BiasKind::LetterWriter => letter_writer_key(s.letter(), s.writer_id()),
        _ => s.id.clone(),
    }
}

/// `generate`: `eval.count` tracings per reference sample of `eval.split`,
/// each conditioned on that sample's bias. The sampling stream depends on
/// the sample and repetition only, so every bias kind sees the same draws.
pub fn generate(cfg: &RunConfig, kind: BiasKind) -> Result<Vec<GeneratedRecord>> {
    let cfg = cfg.resolved()?;
    let mut out = StageOutput::begin(&cfg, "generate", "generated", kind.as_str())?;
    out.require(DATA.0, DATA.1)?;
    out.require("styles", kind.as_str())?;
    out.require("models", kind.as_str())?;
    let data = load_dataset(&cfg)?;
    let table = load_table(&cfg, kind)?;
    let model = GeneratorModel::<f64>::load_checkpoint(cfg.out_dir.join("models").join(checkpoint_file(kind)))?;
    if model.bias_kind != kind {
        return Err(Error::BiasKind {
            expected: kind.to_string(),
            actual: model.bias_kind.to_string(),
        });
    }
    let root = SeededRng::new(derive_seed(cfg.seed, "generate"));
    let temperature = cfg.eval.temperature;
    let mut records = Vec::new();
    for s in data.of_split(cfg.eval.split) {
        let bias = table.bias_for(s)?;
        for rep in 0..cfg.eval.count {
            let seed = root.fork(stream_key(&s.id)).fork(rep as u64).seed();
            let tracing = model.sample(&bias, temperature, &mut SeededRng::new(seed))?;
            records.push(GeneratedRecord {
                reference: s.id.clone(),
                bias_kind: kind.as_str().into(),
                bias_key: bias_key(kind, s),
                letter: s.letter().to_string(),
                writer_id: s.writer_id().to_string(),
                seed,
                temperature,
                directions: tracing.direction_codes(),
                speeds: tracing.speed_codes(),
            });
        }
    }
    if records.is_empty() {
        return Err(Error::InsufficientData(format!("no {} samples to generate for", cfg.eval.split.as_str())));
    }
    out.write(&format!("{}.jsonl", kind.as_str()), &to_jsonl(&records))?;
    out.commit()?;
    Ok(records)
}

/// Scores generated tracings against their references. Pairs with an empty
/// generated tracing are left out of BLEU but kept in the length analysis.
pub fn score(model: &str, pairs: &[(EncodedTracing, EncodedTracing)], brevity: BrevityMode) -> Result<EvalReport> {
    let nonempty: Vec<&(EncodedTracing, EncodedTracing)> =
        pairs.iter().filter(|(g, r)| !g.content().is_empty() && !r.content().is_empty()).collect();
    if nonempty.len() < pairs.len() {
        log::warn!("{model}: {} empty generated tracings left out of BLEU", pairs.len() - nonempty.len());
    }
    let corpus = |m: Modality| {
        PairedCorpus::new(
            nonempty
                .iter()
                .map(|(g, r)| match m {
                    Modality::Direction => (g.direction_codes(), r.direction_codes()),
                    Modality::Speed => (g.speed_codes(), r.speed_codes()),
                })
                .collect(),
        )
    };
    let bleu = BleuReport {
        direction: ModalityBleu::compute(Modality::Direction, &corpus(Modality::Direction)?, brevity)?,
        speed: ModalityBleu::compute(Modality::Speed, &corpus(Modality::Speed)?, brevity)?,
    };
    let gen_len: Vec<usize> = pairs.iter().map(|(g, _)| g.content().len()).collect();
    let ref_len: Vec<usize> = pairs.iter().map(|(_, r)| r.content().len()).collect();
    let eos = match eos_analysis(&gen_len, &ref_len) {
        Err(Error::ConstantInput(what)) => {
            log::warn!("{model}: {what}; Pearson r is undefined");
            let g: Vec<f64> = gen_len.iter().map(|&v| v as f64).collect();
            let r: Vec<f64> = ref_len.iter().map(|&v| v as f64).collect();
            let w = wilcoxon_signed_rank(&r, &g)?;
            EosReport {
                pearson_r: f64::NAN,
                pearson_p: f64::NAN,
                wilcoxon_statistic: w.statistic,
                wilcoxon_p: w.p_value,
                wilcoxon_method: w.method,
                n_pairs: pairs.len(),
            }
        }
        other => other?,
    };
    Ok(EvalReport {
        model: model.to_string(),
        bleu,
        eos,
    })
}

/// `evaluate`: one report row per configured kind, written in all formats.
pub fn evaluate(cfg: &RunConfig) -> Result<Vec<EvalReport>> {
    let cfg = cfg.resolved()?;
    let mut out = StageOutput::begin(&cfg, "evaluate", "reports", "report")?;
    out.require(DATA.0, DATA.1)?;
    let records: Vec<EncodedRecord> = read_jsonl(&cfg.out_dir.join(ENCODED_FILE))?;
    let references: HashMap<&str, &EncodedRecord> = records.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut reports = Vec::new();
    for &kind in &cfg.styles.kinds {
        out.require("generated", kind.as_str())?;
        let generated: Vec<GeneratedRecord> =
            read_jsonl(&cfg.out_dir.join("generated").join(format!("{}.jsonl", kind.as_str())))?;
        let pairs = generated
            .iter()
            .map(|g| {
                let r = references
                    .get(g.reference.as_str())
                    .ok_or_else(|| Error::Format(format!("generated tracing refers to unknown sample {}", g.reference)))?;
                Ok((g.tracing()?, r.tracing()?))
            })
            .collect::<Result<Vec<_>>>()?;
        reports.push(score(kind.as_str(), &pairs, cfg.eval.brevity)?);
    }
    for format in [ReportFormat::Text, ReportFormat::Csv, ReportFormat::Jsonl] {
        out.write(&format!("report.{}", format.extension()), render_report(&reports, format).as_bytes())?;
    }
    out.commit()?;
    Ok(reports)
}

/// `plot`: per-letter sheets and an alphabet contact sheet of the tracings
/// in `generated/<kind>.jsonl`, or of `input` when given.
pub fn plot(cfg: &RunConfig, kind: BiasKind, input: Option<&std::path::Path>) -> Result<Vec<std::path::PathBuf>> {
    let cfg = cfg.resolved()?;
    let mut out = StageOutput::begin(&cfg, "plot", "plots", kind.as_str())?;
    out.require(DATA.0, DATA.1)?;
    let path = match input {
        Some(p) => {
            out.external_input(p)?;
            p.to_path_buf()
        }
        None => {
            out.require("generated", kind.as_str())?;
            cfg.out_dir.join("generated").join(format!("{}.jsonl", kind.as_str()))
        }
    };
    let qpath = cfg.out_dir.join(QUANTIZER_FILE);
    let quantizer = QuantizerSpec::from_text(&fs::read_to_string(&qpath).map_err(|e| Error::io(&qpath, e))?)?;
    let records: Vec<GeneratedRecord> = read_jsonl(&path)?;
    let mut by_letter: BTreeMap<char, Vec<(String, Trajectory)>> = BTreeMap::new();
    for r in &records {
        let letter = r
            .letter
            .chars()
            .next()
            .ok_or_else(|| Error::Format(format!("record for {} has no letter", r.reference)))?;
        let traj = decode_tracing(&r.tracing()?, &quantizer, (0.0, 0.0), DEFAULT_DT)?;
        by_letter.entry(letter).or_default().push((r.reference.clone(), traj));
    }
    let mut files = Vec::new();
    let mut firsts: Vec<(String, &Trajectory)> = Vec::new();
    for (letter, items) in &by_letter {
        let shown: Vec<(String, &Trajectory)> =
            items.iter().take(cfg.eval.plot_per_letter.max(1)).map(|(l, t)| (l.clone(), t)).collect();
        files.push(out.write(&format!("{}/{letter}.svg", kind.as_str()), svg::letter_sheet(*letter, &shown).as_bytes())?);
        firsts.push((letter.to_string(), &items[0].1));
    }
    files.push(out.write(&format!("{}/contact.svg", kind.as_str()), svg::contact_sheet(&firsts).as_bytes())?);
    out.commit()?;
    Ok(files)
}

/// Every stage in order for each configured kind; returns the reports.
pub fn run(cfg: &RunConfig) -> Result<Vec<EvalReport>> {
    synth(cfg)?;
    preprocess(cfg)?;
    for &kind in &cfg.styles.kinds {
        train_styles(cfg, kind)?;
        train_generator(cfg, kind)?;
        generate(cfg, kind)?;
    }
    let reports = evaluate(cfg)?;
    for &kind in &cfg.styles.kinds {
        plot(cfg, kind, None)?;
    }
    Ok(reports)
}
