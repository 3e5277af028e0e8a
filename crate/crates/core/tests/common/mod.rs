//! Independent reference implementations shared by the integration and acceptance tests.
#![allow(dead_code)]

use hwstyle::numerics::SeededRng;

/// Clipped n-gram counts by linear scans over distinct n-grams.
pub fn brute_clipped(generated: &[u8], reference: &[u8], n: usize) -> (u64, u64) {
    if generated.len() < n {
        return (0, 0);
    }
    let grams = |s: &[u8]| -> Vec<Vec<u8>> {
        if s.len() < n {
            return vec![];
        }
        (0..=s.len() - n).map(|i| s[i..i + n].to_vec()).collect()
    };
    let g = grams(generated);
    let r = grams(reference);
    let mut seen: Vec<Vec<u8>> = Vec::new();
    let mut num = 0u64;
    for gram in &g {
        if seen.contains(gram) {
            continue;
        }
        seen.push(gram.clone());
        let cg = g.iter().filter(|x| *x == gram).count() as u64;
        let cr = r.iter().filter(|x| *x == gram).count() as u64;
        num += cg.min(cr);
    }
    (num, g.len() as u64)
}

pub fn brute_precision(pairs: &[(Vec<u8>, Vec<u8>)], n: usize) -> f64 {
    let (mut num, mut den) = (0u64, 0u64);
    for (g, r) in pairs {
        let (a, b) = brute_clipped(g, r, n);
        num += a;
        den += b;
    }
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn random_corpus(rng: &mut SeededRng, pairs: usize, max_len: usize, alphabet: usize) -> Vec<(Vec<u8>, Vec<u8>)> {
    let seq = |rng: &mut SeededRng| -> Vec<u8> {
        let len = 1 + rng.below(max_len);
        (0..len).map(|_| rng.below(alphabet) as u8).collect()
    };
    (0..pairs).map(|_| (seq(rng), seq(rng))).collect()
}

/// Ranks by counting, average over ties.
pub fn brute_ranks(d: &[f64]) -> Vec<f64> {
    d.iter()
        .map(|x| {
            let below = d.iter().filter(|y| y.abs() < x.abs()).count() as f64;
            let equal = d.iter().filter(|y| y.abs() == x.abs()).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Two-sided exact p over all 2^n sign assignments of the nonzero differences `y - x`.
pub fn wilcoxon_enumeration(x: &[f64], y: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - a).filter(|v| *v != 0.0).collect();
    let n = d.len();
    let ranks = brute_ranks(&d);
    let w_plus: f64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| ranks[i]).sum();
    let total: f64 = ranks.iter().sum();
    let w = w_plus.min(total - w_plus);
    let mut extreme = 0u64;
    for mask in 0u64..(1 << n) {
        let s: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if s <= w + 1e-9 {
            extreme += 1;
        }
    }
    (w, (2.0 * extreme as f64 / (1u64 << n) as f64).min(1.0))
}

/// Monte Carlo two-sided p: fraction of random sign flips with min(W+, W-) at most the observed one.
pub fn wilcoxon_monte_carlo(d: &[f64], resamples: usize, rng: &mut SeededRng) -> f64 {
    let d: Vec<f64> = d.iter().copied().filter(|v| *v != 0.0).collect();
    let ranks = brute_ranks(&d);
    let total: f64 = ranks.iter().sum();
    let w_plus: f64 = (0..d.len()).filter(|&i| d[i] > 0.0).map(|i| ranks[i]).sum();
    let w = w_plus.min(total - w_plus);
    let mut hits = 0usize;
    for _ in 0..resamples {
        let bits = rng.next_u64();
        let s: f64 = (0..d.len()).filter(|&i| bits >> i & 1 == 1).map(|i| ranks[i]).sum();
        if s.min(total - s) <= w + 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / resamples as f64
}

/// Textbook product-moment formula.
pub fn pearson_direct(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Γ(k/2) for positive integer k, by exact recursion from Γ(1/2) and Γ(1).
pub fn gamma_half(k: u32) -> f64 {
    match k {
        1 => std::f64::consts::PI.sqrt(),
        2 => 1.0,
        _ => (k as f64 / 2.0 - 1.0) * gamma_half(k - 2),
    }
}

/// I_x(a, b) by its hypergeometric power series; `a2`, `b2` are doubled parameters.
pub fn inc_beta_series(a2: u32, b2: u32, x: f64) -> f64 {
    let (a, b) = (a2 as f64 / 2.0, b2 as f64 / 2.0);
    let beta = gamma_half(a2) * gamma_half(b2) / gamma_half(a2 + b2);
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..100_000 {
        let n = n as f64;
        term *= (a + b + n) / (a + 1.0 + n) * x;
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    x.powf(a) * (1.0 - x).powf(b) / (a * beta) * sum
}

/// Two-sided Pearson p for (n, r) via the series: P(|T| ≥ t) = I_{1-r²}(df/2, 1/2).
pub fn pearson_p_series(n: usize, r: f64) -> f64 {
    let df = (n - 2) as u32;
    inc_beta_series(df, 1, 1.0 - r * r)
}
