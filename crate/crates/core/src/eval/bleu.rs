use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::codec::DIRECTION_LEVELS;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Direction,
    Speed,
}

impl Modality {
    pub const ALL: [Modality; 2] = [Modality::Direction, Modality::Speed];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Direction => "direction",
            Modality::Speed => "speed",
        }
    }
}

/// Generated/reference code sequences for one modality, EOS stripped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedCorpus {
    pairs: Vec<(Vec<u8>, Vec<u8>)>,
}

impl PairedCorpus {
    pub fn new(pairs: Vec<(Vec<u8>, Vec<u8>)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InsufficientData("empty corpus".into()));
        }
        for (i, (g, r)) in pairs.iter().enumerate() {
            if g.is_empty() || r.is_empty() {
                return Err(Error::InvalidInput(format!("pair {i} has an empty sequence")));
            }
            if let Some(&c) = g.iter().chain(r).find(|&&c| c as usize >= DIRECTION_LEVELS) {
                return Err(Error::InvalidInput(format!("pair {i} contains code {c}")));
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(Vec<u8>, Vec<u8>)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn generated_len(&self) -> usize {
        self.pairs.iter().map(|p| p.0.len()).sum()
    }

    pub fn reference_len(&self) -> usize {
        self.pairs.iter().map(|p| p.1.len()).sum()
    }
}

fn ngram_counts(seq: &[u8], n: usize) -> HashMap<&[u8], u32> {
    let mut m = HashMap::new();
    if seq.len() >= n {
        for w in seq.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Clipped `n`-gram matches and total generated `n`-grams for one pair.
pub fn clipped_counts(generated: &[u8], reference: &[u8], n: usize) -> (u64, u64) {
    if n == 0 || generated.len() < n {
        return (0, 0);
    }
    let refs = ngram_counts(reference, n);
    let matched = ngram_counts(generated, n)
        .into_iter()
        .map(|(g, c)| c.min(refs.get(g).copied().unwrap_or(0)) as u64)
        .sum();
    (matched, (generated.len() + 1 - n) as u64)
}

/// Corpus-level clipped precision: summed matches over summed generated n-grams.
pub fn clipped_ngram_precision(corpus: &PairedCorpus, n: usize) -> f64 {
    let (num, den) = corpus.pairs.iter().fold((0, 0), |(a, b), (g, r)| {
        let (m, t) = clipped_counts(g, r, n);
        (a + m, b + t)
    });
    if den == 0 {
        log::warn!("no generated sequence is long enough for {n}-grams; precision set to 0");
        return 0.0;
    }
    num as f64 / den as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BrevityMode {
    /// exp(min(0, 1 - L_R / L_G))
    #[default]
    Exponential,
    /// min(0, 1 - L_R / L_G) used directly as the factor; zero whenever L_G <= L_R.
    AsPrinted,
}

pub fn brevity_factor(corpus: &PairedCorpus, mode: BrevityMode) -> f64 {
    let (lg, lr) = (corpus.generated_len() as f64, corpus.reference_len() as f64);
    let e = (1.0 - lr / lg).min(0.0);
    match mode {
        BrevityMode::Exponential => e.exp(),
        BrevityMode::AsPrinted => e,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub order: usize,
    pub score: f64,
    /// Clipped precisions for n = 1..=order.
    pub precisions: Vec<f64>,
    pub brevity: f64,
    /// Some precision was zero, which forces the score to zero.
    pub zero_precision: bool,
}

/// Cumulative BLEU-`order`: brevity factor times the geometric mean of p_1..p_order, unsmoothed.
pub fn bleu(corpus: &PairedCorpus, order: usize, mode: BrevityMode) -> Result<BleuScore> {
    if order == 0 {
        return Err(Error::InvalidInput("BLEU order must be at least 1".into()));
    }
    let precisions: Vec<f64> = (1..=order).map(|n| clipped_ngram_precision(corpus, n)).collect();
    let brevity = brevity_factor(corpus, mode);
    let zero_precision = precisions.contains(&0.0);
    let score = if zero_precision {
        0.0
    } else {
        brevity * (precisions.iter().map(|p| p.ln()).sum::<f64>() / order as f64).exp()
    };
    Ok(BleuScore {
        order,
        score,
        precisions,
        brevity,
        zero_precision,
    })
}

/// BLEU of every pair on its own, for inspection.
pub fn per_pair_bleu(corpus: &PairedCorpus, order: usize, mode: BrevityMode) -> Result<Vec<f64>> {
    corpus
        .pairs
        .iter()
        .map(|p| Ok(bleu(&PairedCorpus::new(vec![p.clone()])?, order, mode)?.score))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityBleu {
    pub modality: Modality,
    /// Cumulative B-1, B-2, B-3 in [0, 1].
    pub scores: [f64; 3],
    /// Raw clipped precisions p_1, p_2, p_3.
    pub precisions: [f64; 3],
    pub brevity: f64,
    pub zero_precision: bool,
    pub pairs: usize,
    pub generated_len: usize,
    pub reference_len: usize,
}

impl ModalityBleu {
    pub fn compute(modality: Modality, corpus: &PairedCorpus, mode: BrevityMode) -> Result<Self> {
        let b3 = bleu(corpus, 3, mode)?;
        let mut scores = [0.0; 3];
        let mut zero = false;
        for (n, s) in scores.iter_mut().enumerate() {
            let b = bleu(corpus, n + 1, mode)?;
            zero |= b.zero_precision;
            *s = b.score;
        }
        Ok(Self {
            modality,
            scores,
            precisions: [b3.precisions[0], b3.precisions[1], b3.precisions[2]],
            brevity: b3.brevity,
            zero_precision: zero,
            pairs: corpus.len(),
            generated_len: corpus.generated_len(),
            reference_len: corpus.reference_len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuReport {
    pub direction: ModalityBleu,
    pub speed: ModalityBleu,
}

impl BleuReport {
    pub fn get(&self, m: Modality) -> &ModalityBleu {
        match m {
            Modality::Direction => &self.direction,
            Modality::Speed => &self.speed,
        }
    }
}
