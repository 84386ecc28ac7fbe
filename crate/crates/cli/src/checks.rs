//! Reproduction bands for the reference convergence errors.

use coupled_transport::verify::{rates, ConvergenceReport, SelfConvergenceReport};

/// Reference errors at `h = 1/4 ... 1/64`: 3D gradient, 3D L2, 1D broken
/// gradient, 1D L2.
pub const REFERENCE_LEVELS: [usize; 5] = [4, 8, 16, 32, 64];
pub const REFERENCE_GRAD_3D: [f64; 5] = [2.5e-1, 1.4e-1, 9.1e-2, 5.6e-2, 3.4e-2];
pub const REFERENCE_L2_3D: [f64; 5] = [1.9e-2, 5.4e-3, 1.7e-3, 5.2e-4, 1.4e-4];
pub const REFERENCE_GRAD_1D: [f64; 5] = [5.0e-1, 2.5e-1, 1.3e-1, 6.3e-2, 3.1e-2];
pub const REFERENCE_L2_1D: [f64; 5] = [4.1e-2, 2.3e-2, 1.3e-2, 6.2e-3, 2.3e-3];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Factor-2 bands at every reference level and the rate bands.
pub fn manufactured_checks(report: &ConvergenceReport) -> Vec<Check> {
    let mut checks = Vec::new();
    let columns: [(&str, Vec<f64>, &[f64; 5]); 4] = [
        ("3d gradient", report.grad_3d(), &REFERENCE_GRAD_3D),
        ("3d L2", report.l2_3d(), &REFERENCE_L2_3D),
        ("1d broken gradient", report.grad_1d(), &REFERENCE_GRAD_1D),
        ("1d L2", report.l2_1d(), &REFERENCE_L2_1D),
    ];
    for (name, errors, reference) in &columns {
        for (level, e) in report.levels.iter().zip(errors) {
            if let Some(k) = REFERENCE_LEVELS.iter().position(|&n| n == level.n) {
                let ratio = e / reference[k];
                checks.push(Check::new(
                    format!("{name} error at h=1/{} within factor 2", level.n),
                    (0.5..=2.0).contains(&ratio),
                    format!("{e:.3e} vs {:.1e}", reference[k]),
                ));
            }
        }
    }
    let small_pairs = |n: usize| n <= 16;
    let rate_checks: [(&str, Vec<f64>, f64, f64, bool); 4] = [
        ("1d broken gradient rate", rates(&report.grad_1d()), 0.84, 1.14, false),
        ("3d gradient rate", rates(&report.grad_3d()), 0.5, 1.0, false),
        ("3d L2 rate", rates(&report.l2_3d()), 1.5, f64::INFINITY, false),
        ("1d L2 rate", rates(&report.l2_1d()), 0.7, f64::INFINITY, true),
    ];
    for (name, r, lo, hi, coarse_only) in rate_checks {
        for (i, rate) in r.iter().enumerate() {
            let fine_n = report.levels[i + 1].n;
            if coarse_only && !small_pairs(fine_n) {
                continue;
            }
            checks.push(Check::new(
                format!("{name} 1/{} -> 1/{fine_n}", report.levels[i].n),
                (lo..=hi).contains(rate),
                format!("{rate:.3} in [{lo}, {hi}]"),
            ));
        }
    }
    checks
}

fn list(e: &[f64]) -> String {
    e.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn decreasing(e: &[f64]) -> bool {
    e.windows(2).all(|w| w[1] < w[0])
}

/// Monotone decrease for every case; the uniform case also needs a finest
/// 3D rate of at least one.
pub fn self_convergence_checks(report: &SelfConvergenceReport) -> Vec<Check> {
    let id = report.case.id();
    let e3 = report.err_3d();
    let e1 = report.err_1d();
    let mut checks = vec![
        Check::new(format!("case {id} 3d errors decrease"), decreasing(&e3), list(&e3)),
        Check::new(format!("case {id} 1d errors decrease"), decreasing(&e1), list(&e1)),
    ];
    if id == 1 {
        if let Some(&r) = rates(&e3).last() {
            checks.push(Check::new("case 1 finest 3d rate >= 1", r >= 1.0, format!("{r:.3}")));
        }
    }
    checks
}
