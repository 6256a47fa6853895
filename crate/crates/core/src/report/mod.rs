//! Error tables, curve data and the verification suite behind the `smd`
//! binary.

mod reference;
mod verify;

use std::io::Write;

use rayon::prelude::*;

pub use reference::{
    reference_check, reference_table, CellComparison, ReferenceCheck, ReferenceTable, GLOBAL_REL_TOL, SPOT_CHECKS,
    SPOT_REL_TOL,
};
pub use verify::{run_verification_suite, CheckResult, VerificationConfig, VerificationReport};

use crate::basis::TruncationSpec;
use crate::error::Result;
use crate::operator::{apply, SequenceRule};
use crate::quadrature::QuadratureConfig;
use crate::target::TargetFunction;

pub const DEFAULT_XS: [f64; 7] = [0.1, 0.5, 0.9, 1.0, 1.5, 2.0, 2.5];
pub const DEFAULT_NS: [u64; 7] = [10, 50, 100, 200, 250, 500, 1000];

pub const CSV_HEADER: &str = "x,n,u_n,operator_value,g_value,abs_error";

#[derive(Debug, Clone, PartialEq)]
pub struct TableCell {
    pub x: f64,
    pub n: u64,
    pub u_n: f64,
    pub operator_value: f64,
    pub g_value: f64,
    pub abs_error: f64,
    pub tail_bound: f64,
    /// Set when the cell could not be evaluated; the numeric fields are NaN.
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ErrorTable {
    pub g_label: String,
    pub rule: SequenceRule,
    pub xs: Vec<f64>,
    pub ns: Vec<u64>,
    /// Row-major in `(x, n)`.
    pub cells: Vec<TableCell>,
}

impl ErrorTable {
    pub fn cell(&self, x: f64, n: u64) -> Option<&TableCell> {
        let i = self.xs.iter().position(|&v| v == x)?;
        let k = self.ns.iter().position(|&v| v == n)?;
        self.cells.get(i * self.ns.len() + k)
    }

    pub fn failed_cells(&self) -> impl Iterator<Item = &TableCell> {
        self.cells.iter().filter(|c| c.error.is_some())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                sig17(c.x),
                c.n,
                sig17(c.u_n),
                sig17(c.operator_value),
                sig17(c.g_value),
                sig17(c.abs_error)
            )?;
        }
        Ok(())
    }

    /// Rows are `x`, columns are `n`; entries are absolute errors rounded to
    /// six significant digits.
    pub fn pretty(&self) -> String {
        let mut rows = vec![std::iter::once(format!("x \\ n (u_n = {})", self.rule.label()))
            .chain(self.ns.iter().map(|n| n.to_string()))
            .collect::<Vec<_>>()];
        for (i, x) in self.xs.iter().enumerate() {
            let mut row = vec![format!("{x}")];
            for k in 0..self.ns.len() {
                let c = &self.cells[i * self.ns.len() + k];
                row.push(match c.error {
                    Some(_) => "error".into(),
                    None => sig6(c.abs_error),
                });
            }
            rows.push(row);
        }
        let widths: Vec<usize> =
            (0..rows[0].len()).map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0)).collect();
        let mut out = format!("B* error table for g = {}\n", self.g_label);
        for r in &rows {
            let line: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// Formats with 17 significant digits.
pub fn sig17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Rounds to six significant digits, in positional notation for moderate
/// magnitudes and scientific notation otherwise.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0".into();
    }
    let s = format!("{v:.5e}");
    let rounded: f64 = s.parse().unwrap_or(v);
    let exp = rounded.abs().log10().floor() as i32;
    if !(-5..6).contains(&exp) {
        return s;
    }
    let decimals = (5 - exp).max(0) as usize;
    let mut p = format!("{rounded:.decimals$}");
    if p.contains('.') {
        p = p.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    p
}

/// Evaluates `|B*(g;x) − g(x)|` at `u = u_n` for every `(x, n)`; cells are
/// computed in parallel and returned in `(x, n)` order.
pub fn make_error_table(
    g: &TargetFunction,
    rule: &SequenceRule,
    xs: &[f64],
    ns: &[u64],
    trunc: TruncationSpec,
) -> Result<ErrorTable> {
    rule.validate()?;
    trunc.validate()?;
    let us = ns.iter().map(|&n| rule.value(n)).collect::<Result<Vec<_>>>()?;
    let cfg = QuadratureConfig::default();
    let jobs: Vec<(f64, u64, f64)> =
        xs.iter().flat_map(|&x| ns.iter().zip(&us).map(move |(&n, &u)| (x, n, u))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(x, n, u_n)| {
            let g_value = g.eval(x);
            match apply(g, u_n, x, trunc, &cfg) {
                Ok(v) => TableCell {
                    x,
                    n,
                    u_n,
                    operator_value: v.value,
                    g_value,
                    abs_error: (v.value - g_value).abs(),
                    tail_bound: v.tail_bound,
                    error: None,
                },
                Err(e) => TableCell {
                    x,
                    n,
                    u_n,
                    operator_value: f64::NAN,
                    g_value,
                    abs_error: f64::NAN,
                    tail_bound: f64::NAN,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(ErrorTable { g_label: g.label(), rule: rule.clone(), xs: xs.to_vec(), ns: ns.to_vec(), cells })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSeries {
    pub label: String,
    /// `None` for the target itself.
    pub u: Option<f64>,
    pub truncation_j: Option<u64>,
    pub points: Vec<(f64, f64)>,
    /// Per-point bound on the neglected part of the series (zero for the
    /// target curve).
    pub tail_bounds: Vec<f64>,
}

impl CurveSeries {
    pub fn max_deviation_from(&self, other: &CurveSeries) -> f64 {
        self.points.iter().zip(&other.points).map(|(a, b)| (a.1 - b.1).abs()).fold(0.0, f64::max)
    }
}

/// `n` equally spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect(),
    }
}

/// One series per `u` (with the default tail epsilon), one truncated series
/// per `(u, J)` pair when `truncation` is given, and the target last.
pub fn make_curves(
    g: &TargetFunction,
    u_values: &[f64],
    x_grid: &[f64],
    truncation: Option<&[u64]>,
) -> Result<Vec<CurveSeries>> {
    if x_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return crate::error::domain("x grid must be strictly increasing");
    }
    if let Some(js) = truncation {
        if js.len() != u_values.len() {
            return crate::error::domain("truncation list must pair one J with each u");
        }
    }
    let cfg = QuadratureConfig::default();
    let mut specs: Vec<(f64, TruncationSpec)> =
        u_values.iter().map(|&u| (u, TruncationSpec::default())).collect();
    if let Some(js) = truncation {
        specs.extend(u_values.iter().zip(js).map(|(&u, &j)| (u, TruncationSpec::FixedJ(j))));
    }
    let mut out = specs
        .par_iter()
        .map(|&(u, trunc)| -> Result<CurveSeries> {
            let mut points = Vec::with_capacity(x_grid.len());
            let mut tail_bounds = Vec::with_capacity(x_grid.len());
            for &x in x_grid {
                let v = apply(g, u, x, trunc, &cfg)?;
                points.push((x, v.value));
                tail_bounds.push(v.tail_bound);
            }
            let truncation_j = match trunc {
                TruncationSpec::FixedJ(j) => Some(j),
                TruncationSpec::TailEpsilon(_) => None,
            };
            let label = match truncation_j {
                Some(j) => format!("B*(u={u},J={j})"),
                None => format!("B*(u={u})"),
            };
            Ok(CurveSeries { label, u: Some(u), truncation_j, points, tail_bounds })
        })
        .collect::<Result<Vec<_>>>()?;
    out.push(CurveSeries {
        label: format!("g = {}", g.label()),
        u: None,
        truncation_j: None,
        points: x_grid.iter().map(|&x| (x, g.eval(x))).collect(),
        tail_bounds: vec![0.0; x_grid.len()],
    });
    Ok(out)
}

/// Long-format CSV: `label,u,J,x,value,tail_bound`.
pub fn write_curves_csv<W: Write>(curves: &[CurveSeries], mut w: W) -> Result<()> {
    writeln!(w, "label,u,J,x,value,tail_bound")?;
    for c in curves {
        let u = c.u.map(sig17).unwrap_or_default();
        let j = c.truncation_j.map(|j| j.to_string()).unwrap_or_default();
        for (&(x, v), &tb) in c.points.iter().zip(&c.tail_bounds) {
            writeln!(w, "\"{}\",{u},{j},{},{},{}", c.label, sig17(x), sig17(v), sig17(tb))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn x2e2x() -> TargetFunction {
        TargetFunction::builtin("x2e2x").unwrap()
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(sig6(1.4613712), "1.46137");
        assert_eq!(sig6(10237.61), "10237.6");
        assert_eq!(sig6(0.000622967123), "0.000622967");
        assert_eq!(sig6(6.155941e-7), "6.15594e-7");
        assert_eq!(sig6(226.68949), "226.689");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(999999.7), "1.00000e6");
    }

    #[test]
    fn sig17_round_trips() {
        for v in [0.1, 1.0 / 3.0, 226.68949, 6.155941e-7] {
            assert_eq!(sig17(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn table_cells_and_order() {
        let t = make_error_table(&x2e2x(), &SequenceRule::Identity, &[2.5, 1.0], &[100, 10], TruncationSpec::default())
            .unwrap();
        let order: Vec<(f64, u64)> = t.cells.iter().map(|c| (c.x, c.n)).collect();
        assert_eq!(order, vec![(2.5, 100), (2.5, 10), (1.0, 100), (1.0, 10)]);
        let c = t.cell(1.0, 100).unwrap();
        assert_relative_eq!(c.abs_error, 1.46137, max_relative = 5e-6);
        assert_eq!(c.abs_error, (c.operator_value - c.g_value).abs());
        let c = t.cell(2.5, 100).unwrap();
        assert_relative_eq!(c.abs_error, 226.689, max_relative = 5e-6);
    }

    #[test]
    fn divergent_cells_are_reported() {
        let t = make_error_table(&x2e2x(), &SequenceRule::Identity, &[1.0], &[1, 2, 3], TruncationSpec::default())
            .unwrap();
        assert_eq!(t.failed_cells().count(), 2);
        assert!(t.cell(1.0, 3).unwrap().error.is_none());
        assert!(t.pretty().contains("error"));
    }

    #[test]
    fn csv_layout() {
        let t = make_error_table(&x2e2x(), &SequenceRule::Power(2.0), &[0.1], &[10], TruncationSpec::default())
            .unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 6);
        assert_eq!(fields[1], "10");
        assert_eq!(fields[2].parse::<f64>().unwrap(), 100.0);
        assert!(lines.next().is_none());
    }

    #[test]
    fn constant_curve_is_flat() {
        let xs = linspace(0.0, 2.5, 26);
        let curves = make_curves(&TargetFunction::constant(1.0), &[15.0], &xs, None).unwrap();
        assert_eq!(curves.len(), 2);
        assert!(curves[0].points.iter().all(|p| (p.1 - 1.0).abs() <= 1e-12));
        assert_eq!(curves[1].u, None);
    }

    #[test]
    fn curves_approach_target() {
        let g = TargetFunction::builtin("negx3e5x").unwrap();
        let xs = linspace(0.0, 2.5, 51);
        let curves = make_curves(&g, &[15.0, 35.0, 50.0], &xs, Some(&[15, 35, 50])).unwrap();
        assert_eq!(curves.len(), 7);
        let target = curves.last().unwrap();
        let d: Vec<f64> = curves[..3].iter().map(|c| c.max_deviation_from(target)).collect();
        assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
        assert_eq!(curves[3].truncation_j, Some(15));
        assert!(make_curves(&g, &[15.0], &xs, Some(&[1, 2])).is_err());
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(0.0, 2.5, 11);
        assert_eq!(v.len(), 11);
        assert_eq!(v[10], 2.5);
        assert_relative_eq!(v[4], 1.0, max_relative = 1e-15);
    }
}
