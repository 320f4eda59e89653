//! Central finite-difference gradient checking.

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Step used by the acceptance checks.
pub const DEFAULT_STEP: f64 = 1e-6;
/// Relative-error tolerance used by the acceptance checks.
pub const DEFAULT_TOL: f64 = 1e-5;

/// Which parameter coordinates to probe.
#[derive(Debug, Clone, Copy)]
pub enum Coordinates {
    All,
    /// `count` distinct coordinates drawn with `seed` (all of them if fewer exist).
    Sample { count: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub tol: f64,
    pub passed: bool,
}

/// `(f(x + h) - f(x - h)) / 2h`.
pub fn central_difference(mut f: impl FnMut(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Relative error `|a - b| / max(1e-8, |a| + |b|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares `analytic` against central differences of `objective` at `params`.
pub fn grad_check(
    mut objective: impl FnMut(&[f64]) -> f64,
    params: &[f64],
    analytic: &[f64],
    h: f64,
    tol: f64,
    coords: Coordinates,
) -> Result<GradCheckReport> {
    if !(h > 0.0) {
        return Err(Error::Range(format!("finite-difference step {h} must be positive")));
    }
    if params.len() != analytic.len() {
        return Err(Error::shape(
            "grad_check",
            format!("{} params vs {} gradient entries", params.len(), analytic.len()),
        ));
    }
    let indices: Vec<usize> = match coords {
        Coordinates::All => (0..params.len()).collect(),
        Coordinates::Sample { count, seed } => {
            let mut all: Vec<usize> = (0..params.len()).collect();
            SeededRng::new(seed).shuffle(&mut all);
            all.truncate(count);
            all.sort_unstable();
            all
        }
    };

    let mut point = params.to_vec();
    let mut eval = |p: &[f64]| {
        let v = objective(p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation(format!("objective returned {v}")))
        }
    };
    eval(&point)?;

    let mut max_rel_error = 0.0f64;
    let mut worst_index = indices.first().copied().unwrap_or(0);
    for &i in &indices {
        let x = point[i];
        point[i] = x + h;
        let plus = eval(&point)?;
        point[i] = x - h;
        let minus = eval(&point)?;
        point[i] = x;
        let numeric = (plus - minus) / (2.0 * h);
        let err = relative_error(analytic[i], numeric);
        if err > max_rel_error || err.is_nan() {
            max_rel_error = err;
            worst_index = i;
        }
    }
    Ok(GradCheckReport {
        checked: indices.len(),
        max_rel_error,
        worst_index,
        tol,
        passed: max_rel_error <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_norm_sq(p: &[f64]) -> f64 {
        0.5 * p.iter().map(|v| v * v).sum::<f64>()
    }

    #[test]
    fn quadratic_is_exact() {
        // no truncation error for a quadratic; a wider step keeps rounding small
        let p = [0.3, -1.2, 2.5, 4.0];
        let report = grad_check(half_norm_sq, &p, &p, 1e-3, 1e-9, Coordinates::All).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.checked, 4);
    }

    #[test]
    fn corrupted_gradient_fails() {
        let p = [0.3, -1.2, 2.5, 4.0];
        let mut g = p.to_vec();
        g[2] *= 2.0;
        let report = grad_check(half_norm_sq, &p, &g, 1e-6, 1e-5, Coordinates::All).unwrap();
        assert!(!report.passed);
        assert_eq!(report.worst_index, 2);
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let p = [1.0];
        let r = grad_check(|_| f64::NAN, &p, &p, 1e-6, 1e-5, Coordinates::All);
        assert!(matches!(r, Err(Error::Evaluation(_))));
    }

    #[test]
    fn bad_step_rejected() {
        let p = [1.0];
        assert!(grad_check(half_norm_sq, &p, &p, 0.0, 1e-5, Coordinates::All).is_err());
    }

    #[test]
    fn sampling_respects_count() {
        let p: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let report = grad_check(
            half_norm_sq,
            &p,
            &p,
            1e-6,
            1e-9,
            Coordinates::Sample { count: 10, seed: 3 },
        )
        .unwrap();
        assert_eq!(report.checked, 10);
    }
}
