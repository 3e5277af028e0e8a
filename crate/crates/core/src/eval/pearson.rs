use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::special::student_t_two_sided;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PearsonResult {
    pub r: f64,
    /// Two-sided, from the t distribution with n - 2 degrees of freedom.
    pub p_value: f64,
    pub n: usize,
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<PearsonResult> {
    if x.len() != y.len() {
        return Err(Error::shape("pearson", &[x.len()], &[y.len()]));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("pearson needs at least 3 pairs, got {n}")));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantInput("pearson correlation of a constant sequence"));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok(PearsonResult {
        r,
        p_value: pearson_p(r, n),
        n,
    })
}

/// Two-sided p-value of correlation `r` over `n` pairs.
pub fn pearson_p(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    student_t_two_sided(r * (df / (1.0 - r * r)).sqrt(), df)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_hand_values() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson(&x, &y2).unwrap().r, 1.0);
        assert_eq!(pearson(&x, &neg).unwrap().r, -1.0);
        assert_eq!(pearson(&x, &y2).unwrap().p_value, 0.0);
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((r.r - 0.5).abs() < 1e-15);
        // df = 1: p = 1 - (2/pi) atan(|t|), t = 0.5 * sqrt(1 / 0.75)
        let t: f64 = 0.5 / 0.75f64.sqrt();
        assert!((r.p_value - (1.0 - 2.0 / std::f64::consts::PI * t.atan())).abs() < 1e-14);
    }

    #[test]
    fn constant_input() {
        let err = pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(err.to_string().contains("constant input"));
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }
}
