use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::pearson::pearson;
use crate::eval::wilcoxon::{wilcoxon_signed_rank, WilcoxonMethod};

pub const MIN_EOS_PAIRS: usize = 5;

/// Agreement between generated and reference tracing lengths (frames before EOS).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EosReport {
    pub pearson_r: f64,
    pub pearson_p: f64,
    pub wilcoxon_statistic: f64,
    pub wilcoxon_p: f64,
    pub wilcoxon_method: WilcoxonMethod,
    pub n_pairs: usize,
}

pub fn eos_analysis(generated: &[usize], reference: &[usize]) -> Result<EosReport> {
    if generated.len() != reference.len() {
        return Err(Error::shape("eos_analysis", &[generated.len()], &[reference.len()]));
    }
    if generated.len() < MIN_EOS_PAIRS {
        return Err(Error::InsufficientData(format!(
            "EOS analysis needs at least {MIN_EOS_PAIRS} pairs, got {}",
            generated.len()
        )));
    }
    let g: Vec<f64> = generated.iter().map(|&v| v as f64).collect();
    let r: Vec<f64> = reference.iter().map(|&v| v as f64).collect();
    let p = pearson(&g, &r)?;
    let w = wilcoxon_signed_rank(&r, &g)?;
    Ok(EosReport {
        pearson_r: p.r,
        pearson_p: p.p_value,
        wilcoxon_statistic: w.statistic,
        wilcoxon_p: w.p_value,
        wilcoxon_method: w.method,
        n_pairs: generated.len(),
    })
}
