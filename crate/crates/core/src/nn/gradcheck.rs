//! Central finite-difference gradient verification (64-bit only).

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const MAX_COORDS: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Coordinate with the largest relative error.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
    pub tolerance: f64,
    pub passed: bool,
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} max_rel_err={:.3e} (coord {}: analytic={:.6e} numeric={:.6e}) over {} coords, tol={:.0e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.max_rel_error,
            self.worst_index,
            self.analytic,
            self.numeric,
            self.checked,
            self.tolerance
        )
    }
}

/// `|a − n| / max(|a|, |n|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares the analytic gradient returned by `f` at `params` against
/// central differences. Above `MAX_COORDS` parameters a seeded random
/// subset of coordinates is checked.
pub fn grad_check<F>(mut f: F, params: &[f64], tolerance: f64, seed: u64) -> GradCheckReport
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let (_, analytic) = f(params);
    assert_eq!(analytic.len(), params.len(), "gradient length mismatch");

    let coords: Vec<usize> = if params.len() <= MAX_COORDS {
        (0..params.len()).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = sample(&mut rng, params.len(), MAX_COORDS).into_vec();
        v.sort_unstable();
        v
    };

    let mut p = params.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        checked: coords.len(),
        tolerance,
        passed: true,
    };
    for &i in &coords {
        let orig = p[i];
        p[i] = orig + FD_STEP;
        let (plus, _) = f(&p);
        p[i] = orig - FD_STEP;
        let (minus, _) = f(&p);
        p[i] = orig;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let err = relative_error(analytic[i], numeric);
        if err > report.max_rel_error || !err.is_finite() {
            report.max_rel_error = err;
            report.worst_index = i;
            report.analytic = analytic[i];
            report.numeric = numeric;
        }
    }
    report.passed = report.max_rel_error < tolerance;
    report
}
