use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::bleu::{BleuReport, Modality, ModalityBleu};
use crate::eval::eos::EosReport;

/// Scores of one model: BLEU per modality plus the EOS length statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub bleu: BleuReport,
    pub eos: EosReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Text,
    Csv,
    Jsonl,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Self::Text),
            "csv" => Ok(Self::Csv),
            "jsonl" | "json-lines" => Ok(Self::Jsonl),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Text => "txt",
            Self::Csv => "csv",
            Self::Jsonl => "jsonl",
        }
    }
}

pub const CSV_HEADER: [&str; 10] = [
    "model",
    "modality",
    "b1",
    "b2",
    "b3",
    "pearson_r",
    "pearson_p",
    "wilcoxon_w",
    "wilcoxon_p",
    "n",
];

/// One CSV line as rendered (B-scores already ×100 and rounded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub model: String,
    pub modality: Modality,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub pearson_r: f64,
    pub pearson_p: f64,
    pub wilcoxon_w: f64,
    pub wilcoxon_p: f64,
    pub n: usize,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    model: &'a str,
    modality: Modality,
    b1: f64,
    b2: f64,
    b3: f64,
    p1: f64,
    p2: f64,
    p3: f64,
    brevity: f64,
    zero_precision: bool,
    generated_len: usize,
    reference_len: usize,
    pearson_r: f64,
    pearson_p: f64,
    wilcoxon_w: f64,
    wilcoxon_p: f64,
    n: usize,
}

fn pct(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

fn prob(v: f64) -> String {
    format!("{v:.4e}")
}

fn rows(reports: &[EvalReport]) -> impl Iterator<Item = (&EvalReport, &ModalityBleu)> {
    reports
        .iter()
        .flat_map(|r| Modality::ALL.into_iter().map(move |m| (r, r.bleu.get(m))))
}

pub fn render_report(reports: &[EvalReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => render_text(reports),
        ReportFormat::Csv => render_csv(reports),
        ReportFormat::Jsonl => render_jsonl(reports),
    }
}

fn render_text(reports: &[EvalReport]) -> String {
    let width = reports.iter().map(|r| r.model.len()).max().unwrap_or(0).max(5);
    let mut out = String::new();
    let _ = writeln!(out, "Clipped n-gram BLEU (x100)");
    let _ = writeln!(
        out,
        "{:<width$}  {:<9}  {:>5}  {:>5}  {:>5}  {:>5}  {:>5}  {:>5}  {:>6}",
        "model", "modality", "B-1", "B-2", "B-3", "p1", "p2", "p3", "BP"
    );
    let mut flagged = false;
    for (r, m) in rows(reports) {
        flagged |= m.zero_precision;
        let _ = writeln!(
            out,
            "{:<width$}  {:<9}  {:>5}  {:>5}  {:>5}  {:>5}  {:>5}  {:>5}  {:>6.4}{}",
            r.model,
            m.modality.as_str(),
            pct(m.scores[0]),
            pct(m.scores[1]),
            pct(m.scores[2]),
            pct(m.precisions[0]),
            pct(m.precisions[1]),
            pct(m.precisions[2]),
            m.brevity,
            if m.zero_precision { " *" } else { "" }
        );
    }
    if flagged {
        let _ = writeln!(out, "* a clipped precision is zero; cumulative scores from that order on are 0");
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "EOS length agreement");
    let _ = writeln!(
        out,
        "{:<width$}  {:>9}  {:>10}  {:>10}  {:>10}  {:>4}",
        "model", "pearson_r", "pearson_p", "wilcoxon_w", "wilcoxon_p", "n"
    );
    for r in reports {
        let e = &r.eos;
        let _ = writeln!(
            out,
            "{:<width$}  {:>9.4}  {:>10}  {:>10.1}  {:>10}  {:>4}",
            r.model,
            e.pearson_r,
            prob(e.pearson_p),
            e.wilcoxon_statistic,
            prob(e.wilcoxon_p),
            e.n_pairs
        );
    }
    out
}

fn render_csv(reports: &[EvalReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory csv");
    for (r, m) in rows(reports) {
        let e = &r.eos;
        w.write_record([
            r.model.clone(),
            m.modality.as_str().to_string(),
            pct(m.scores[0]),
            pct(m.scores[1]),
            pct(m.scores[2]),
            format!("{:.4}", e.pearson_r),
            prob(e.pearson_p),
            format!("{:.1}", e.wilcoxon_statistic),
            prob(e.wilcoxon_p),
            e.n_pairs.to_string(),
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

fn render_jsonl(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    for (r, m) in rows(reports) {
        let e = &r.eos;
        let row = JsonRow {
            model: &r.model,
            modality: m.modality,
            b1: m.scores[0],
            b2: m.scores[1],
            b3: m.scores[2],
            p1: m.precisions[0],
            p2: m.precisions[1],
            p3: m.precisions[2],
            brevity: m.brevity,
            zero_precision: m.zero_precision,
            generated_len: m.generated_len,
            reference_len: m.reference_len,
            pearson_r: e.pearson_r,
            pearson_p: e.pearson_p,
            wilcoxon_w: e.wilcoxon_statistic,
            wilcoxon_p: e.wilcoxon_p,
            n: e.n_pairs,
        };
        out.push_str(&serde_json::to_string(&row).expect("report row serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Format(format!("unexpected csv header {header:?}")));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Format(e.to_string())))
        .collect()
}
