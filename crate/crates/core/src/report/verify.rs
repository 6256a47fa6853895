//! A self-check over the moment identities, kernel properties, error bounds
//! and convergence rates. Failures are returned as data.

use super::{linspace, make_error_table, reference_check, DEFAULT_NS, DEFAULT_XS};
use crate::basis::TruncationSpec;
use crate::bounds::{dbv_empirical_check, lip_space_bound, lipschitz_bound_check, DbvSpec};
use crate::error::Result;
use crate::moments::{
    central_moment, central_moment_poly, central_moments_by_recurrence, decay_order_check, raw_moment,
    RecurrenceForm, ZetaFactor,
};
use crate::operator::{apply, kernel_cdf, kernel_sf, SequenceRule};
use crate::quadrature::QuadratureConfig;
use crate::target::TargetFunction;

#[derive(Debug, Clone, Default)]
pub struct VerificationConfig {
    pub recurrence: RecurrenceForm,
    /// Also recompute the three reference tables (about 150 operator
    /// evaluations) and compare them with the printed values.
    pub reference_tables: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self { name: name.into(), measured, tolerance, passed: measured <= tolerance }
    }

    fn at_least(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self { name: name.into(), measured, tolerance, passed: measured >= tolerance }
    }

    fn failed(name: impl Into<String>, tolerance: f64) -> Self {
        Self { name: name.into(), measured: f64::NAN, tolerance, passed: false }
    }
}

#[derive(Debug, Clone, Default)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: &str, tolerance: f64, r: Result<CheckResult>) {
        self.checks.push(r.unwrap_or_else(|_| CheckResult::failed(name, tolerance)));
    }
}

const SAMPLE_U: [f64; 7] = [1.0, 2.5, 10.0, 37.0, 100.0, 1e3, 1e4];
const SAMPLE_X: [f64; 6] = [0.0, 0.1, 0.7, 1.0, 2.5, 10.0];

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

fn raw_closed_forms() -> Result<f64> {
    let mut worst = 0.0f64;
    for &u in &SAMPLE_U {
        for &x in &SAMPLE_X {
            let xu = x * u;
            let expected = [
                1.0,
                (1.0 + xu) / u,
                (2.0 + 4.0 * xu + xu * xu) / (u * u),
                (6.0 + 18.0 * xu + 9.0 * xu * xu + xu * xu * xu) / (u * u * u),
            ];
            for (m, e) in expected.iter().enumerate() {
                worst = worst.max(rel(raw_moment(u, x, m)?, *e));
            }
        }
    }
    Ok(worst)
}

fn low_central() -> Result<(f64, f64)> {
    let mut low = 0.0f64;
    let mut second = 0.0f64;
    for &u in &SAMPLE_U {
        for &x in &SAMPLE_X {
            low = low.max(rel(central_moment(u, x, 0)?, 1.0)).max(rel(central_moment(u, x, 1)?, 1.0 / u));
            second = second.max(rel(central_moment(u, x, 2)?, 2.0 * ZetaFactor::new(u, x)?.squared() / u));
        }
    }
    Ok((low, second))
}

fn kernel_checks(report: &mut VerificationReport) {
    let trunc = TruncationSpec::default();
    let norm = (|| -> Result<f64> {
        let mut worst = 0.0f64;
        for u in [10.0, 100.0] {
            for x in [0.5, 1.0, 2.0] {
                worst = worst.max((kernel_cdf(u, x, f64::INFINITY, trunc)? - 1.0).abs());
                worst = worst.max((kernel_cdf(u, x, 1e3 * (1.0 + x), trunc)? - 1.0).abs());
            }
        }
        Ok(worst)
    })();
    report.push(
        "kernel integrates to 1",
        1e-10,
        norm.map(|v| CheckResult::at_most("kernel integrates to 1", v, 1e-10)),
    );

    let tails = (|| -> Result<f64> {
        let mut worst = 0.0f64;
        for u in [100.0, 400.0] {
            for x in [0.5, 1.0, 2.0] {
                let z2 = ZetaFactor::new(u, x)?.squared();
                for y in [x / 4.0, x / 2.0] {
                    worst = worst.max(kernel_cdf(u, x, y, trunc)? / (2.0 * z2 / ((x - y).powi(2) * u)));
                }
                for z in [1.5 * x, 2.0 * x] {
                    worst = worst.max(kernel_sf(u, x, z, trunc)? / (2.0 * z2 / ((z - x).powi(2) * u)));
                }
            }
        }
        Ok(worst)
    })();
    report.push(
        "kernel tail inequalities (max ratio)",
        1.0,
        tails.map(|v| CheckResult::at_most("kernel tail inequalities (max ratio)", v, 1.0)),
    );
}

fn bound_checks(report: &mut VerificationReport) {
    let lip = (|| -> Result<f64> {
        let g = TargetFunction::exp_poly(1.0, 0, -1.0);
        let mut worst = 0.0f64;
        for u in [50.0, 100.0, 400.0] {
            for x in [0.5, 1.0, 2.0] {
                let c = lipschitz_bound_check(&g, 1.0, u, x)?;
                if !c.holds {
                    return Ok(f64::INFINITY);
                }
                worst = worst.max(c.lhs / c.rhs);
            }
        }
        Ok(worst)
    })();
    let name = "Lipschitz bound, g = e^-t, s = 1 (max lhs/rhs)";
    report.push(name, 1.0, lip.map(|v| CheckResult::at_most(name, v, 1.0)));

    let lip_space = (|| -> Result<f64> {
        let us = [10.0, 50.0, 100.0, 400.0, 1e3, 1e4];
        let mut worst = 0.0f64;
        for x in [0.5, 1.0, 2.0] {
            let b = us.iter().map(|&u| lip_space_bound(1.0, 1.0, 1.0, 0.5, u, x)).collect::<Result<Vec<_>>>()?;
            if b.iter().any(|&v| !(v > 0.0)) {
                return Ok(f64::INFINITY);
            }
            worst = b.windows(2).map(|w| w[1] / w[0]).fold(worst, f64::max);
        }
        Ok(worst)
    })();
    let name = "Lip-space bound decreasing in u (max successive ratio)";
    report.push(name, 1.0, lip_space.map(|v| CheckResult { passed: v < 1.0, ..CheckResult::at_most(name, v, 1.0) }));

    let dbv = (|| -> Result<f64> {
        let spec = DbvSpec::abs_kink(1.0);
        let mut worst = 0.0f64;
        for u in [100.0, 400.0, 900.0] {
            for x in [0.5, 1.0, 1.5] {
                let c = dbv_empirical_check(&spec, u, x)?;
                if !c.holds {
                    return Ok(f64::INFINITY);
                }
                worst = worst.max(c.lhs / c.rhs);
            }
        }
        Ok(worst)
    })();
    let name = "bounded-variation bound, g = |t-1| (max lhs/bound)";
    report.push(name, 1.0, dbv.map(|v| CheckResult::at_most(name, v, 1.0)));

    let affine = (|| -> Result<f64> {
        let mut worst = 0.0f64;
        for (a, b) in [(0.0, 1.0), (2.0, -3.0), (-1.0, 0.25)] {
            let spec = DbvSpec::affine(a, b);
            for u in [10.0, 100.0, 900.0] {
                for x in [0.5, 1.0, 2.0] {
                    let c = dbv_empirical_check(&spec, u, x)?;
                    worst = worst.max(rel(c.lhs, b.abs() / u)).max(rel(c.rhs, b.abs() / u));
                }
            }
        }
        Ok(worst)
    })();
    let name = "bounded-variation bound attained for affine g";
    report.push(name, 1e-9, affine.map(|v| CheckResult::at_most(name, v, 1e-9)));
}

fn sup_error(g: &TargetFunction, u: f64, xs: &[f64]) -> Result<f64> {
    let cfg = QuadratureConfig::default();
    let mut worst = 0.0f64;
    for &x in xs {
        worst = worst.max((apply(g, u, x, TruncationSpec::default(), &cfg)?.value - g.eval(x)).abs());
    }
    Ok(worst)
}

fn korovkin_checks(report: &mut VerificationReport) {
    let xs = linspace(0.0, 2.5, 126);
    for (label, g) in [("1", TargetFunction::constant(1.0)), ("t", TargetFunction::monomial(1)), ("t^2", TargetFunction::monomial(2))] {
        let name = format!("Korovkin decay g = {label} (error ratio u=1e2 / u=1e4)");
        let r = (|| -> Result<CheckResult> {
            let e2 = sup_error(&g, 1e2, &xs)?;
            let e4 = sup_error(&g, 1e4, &xs)?;
            if label == "1" {
                let name = "Korovkin g = 1 (sup error over u = 1e2, 1e3, 1e4)";
                return Ok(CheckResult::at_most(name, e2.max(e4).max(sup_error(&g, 1e3, &xs)?), 1e-12));
            }
            Ok(CheckResult::at_least(name.clone(), e2 / e4, 50.0))
        })();
        report.push(&name, 50.0, r);
    }
}

fn recurrence_checks(report: &mut VerificationReport, form: RecurrenceForm) {
    let rec = central_moments_by_recurrence(6, form);
    for m in 1..6 {
        let name = format!("recurrence step m={m} (max coefficient difference)");
        let r = rec.as_ref().map_err(Clone::clone).and_then(|table| {
            let diff = table[m + 1].max_coeff_diff(&central_moment_poly(m + 1)?);
            Ok(CheckResult::at_most(name.clone(), diff as f64, 0.0))
        });
        report.push(&name, 0.0, r);
    }
}

fn decay_checks(report: &mut VerificationReport) {
    let grid = [1e2, 1e3, 1e4, 1e5, 1e6];
    for m in 1..=4 {
        let name = format!("decay order m={m} (|slope - expected|)");
        let r = decay_order_check(m, 1.0, &grid)
            .map(|d| CheckResult::at_most(name.clone(), (d.exponent - d.expected).abs(), 0.1));
        report.push(&name, 0.1, r);
    }
}

fn table_checks(report: &mut VerificationReport) {
    let g = TargetFunction::exp_poly(1.0, 2, 2.0);
    let rules = [SequenceRule::Identity, SequenceRule::Power(1.5), SequenceRule::Power(2.0)];
    let mut tables = Vec::new();
    for (i, rule) in rules.iter().enumerate() {
        let name = format!("reference table {} (max relative error)", i + 1);
        match make_error_table(&g, rule, &DEFAULT_XS, &DEFAULT_NS, TruncationSpec::default()) {
            Ok(t) => {
                let c = reference_check(&t, i + 1);
                report.checks.push(CheckResult {
                    passed: c.passed(),
                    ..CheckResult::at_most(name, c.max_rel_error(), super::GLOBAL_REL_TOL)
                });
                tables.push(t);
            }
            Err(_) => report.checks.push(CheckResult::failed(name, super::GLOBAL_REL_TOL)),
        }
    }
    if tables.len() == 3 {
        let mut worst = 0.0f64;
        let cells = tables.iter().flat_map(|t| t.cells.iter());
        for a in cells.clone() {
            for b in cells.clone().filter(|b| b.u_n == a.u_n && b.x == a.x) {
                worst = worst.max(rel(a.abs_error, b.abs_error));
            }
        }
        report.checks.push(CheckResult::at_most("cells with equal u_n agree (max relative difference)", worst, 1e-10));
    }
}

pub fn run_verification_suite(cfg: &VerificationConfig) -> VerificationReport {
    let mut report = VerificationReport::default();
    let name = "raw moments m <= 3 closed forms (max relative error)";
    report.push(name, 1e-13, raw_closed_forms().map(|v| CheckResult::at_most(name, v, 1e-13)));
    match low_central() {
        Ok((low, second)) => {
            report.checks.push(CheckResult::at_most("central moments of order 0 and 1", low, 0.0));
            report.checks.push(CheckResult::at_most("second central moment equals 2 zeta^2 / u", second, 1e-14));
        }
        Err(_) => report.checks.push(CheckResult::failed("central moments of order 0 and 1", 0.0)),
    }
    recurrence_checks(&mut report, cfg.recurrence);
    decay_checks(&mut report);
    kernel_checks(&mut report);
    bound_checks(&mut report);
    korovkin_checks(&mut report);
    if cfg.reference_tables {
        table_checks(&mut report);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let r = run_verification_suite(&VerificationConfig::default());
        let failures: Vec<_> = r.failures().collect();
        assert!(failures.is_empty(), "{failures:#?}");
        assert!(r.checks.len() >= 18);
    }

    #[test]
    fn printed_recurrence_fails_first_step() {
        let r = run_verification_suite(&VerificationConfig { recurrence: RecurrenceForm::AsPrinted, ..Default::default() });
        let first = r.failures().next().unwrap();
        assert_eq!(first.name, "recurrence step m=1 (max coefficient difference)");
    }
}
