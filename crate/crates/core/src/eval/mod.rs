//! Scoring generated tracings against references.

mod bleu;
mod eos;
mod pearson;
mod report;
pub mod special;
mod wilcoxon;

pub use bleu::{
    bleu, brevity_factor, clipped_counts, clipped_ngram_precision, per_pair_bleu, BleuReport, BleuScore,
    BrevityMode, Modality, ModalityBleu, PairedCorpus,
};
pub use eos::{eos_analysis, EosReport, MIN_EOS_PAIRS};
pub use pearson::{pearson, pearson_p, PearsonResult};
pub use report::{parse_csv, render_report, CsvRow, EvalReport, ReportFormat, CSV_HEADER};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonMethod, WilcoxonResult, EXACT_MAX_N};
