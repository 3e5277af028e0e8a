use crate::numerics::Scalar;

/// Denominator floor of the relative error, so that coordinates whose true
/// gradient is ~0 are compared on an absolute scale.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Central-difference check of `analytic` against `f` at `params`.
pub fn grad_check<T, F>(f: F, params: &[T], analytic: &[T], h: f64, tolerance: f64) -> GradCheckReport
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let all: Vec<usize> = (0..params.len()).collect();
    grad_check_at(f, params, analytic, &all, h, tolerance)
}

/// As [`grad_check`] but only over the listed coordinates.
pub fn grad_check_at<T, F>(
    mut f: F,
    params: &[T],
    analytic: &[T],
    indices: &[usize],
    h: f64,
    tolerance: f64,
) -> GradCheckReport
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    assert_eq!(params.len(), analytic.len(), "gradient length");
    let mut x = params.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
        tolerance,
        passed: true,
    };
    let step = T::lit(h);
    for &i in indices {
        let orig = x[i];
        x[i] = orig + step;
        let up = f(&x).as_f64();
        x[i] = orig - step;
        let down = f(&x).as_f64();
        x[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let a = analytic[i].as_f64();
        let err = relative_error(a, numeric);
        report.checked += 1;
        if err > report.max_rel_error || err.is_nan() {
            report.max_rel_error = err;
            report.worst_index = i;
            report.analytic = a;
            report.numeric = numeric;
        }
    }
    report.passed = report.max_rel_error < tolerance;
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_at_three() {
        let r = grad_check(|x: &[f64]| x[0] * x[0], &[3.0], &[6.0], 1e-5, 1e-9);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn corrupted_gradient_fails() {
        let f = |x: &[f64]| x[0].sin() * x[1] + x[1] * x[1];
        let p = [0.7f64, -1.3];
        let good = [p[0].cos() * p[1], p[0].sin() + 2.0 * p[1]];
        assert!(grad_check(f, &p, &good, 1e-5, 1e-6).passed);
        let bad = [good[0] * 1.1, good[1]];
        assert!(!grad_check(f, &p, &bad, 1e-5, 1e-6).passed);
    }
}
