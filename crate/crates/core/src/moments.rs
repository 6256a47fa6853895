//! Raw and central moments of the operator as exact polynomials.
//!
//! Every moment is a polynomial in `x` and `1/u` with integer coefficients:
//! `B*(t^m; x) = Σ_k C(m,k) (m!/k!) x^k u^{k−m}`, which follows from
//! `(j+m)!/j! = Σ_k C(m,k) (m!/k!) j(j−1)…(j−k+1)` and the Poisson factorial
//! moments `E[J(J−1)…(J−k+1)] = (ux)^k`. Central moments are built from
//! these by the binomial expansion in exact arithmetic, so evaluating them
//! never suffers the cancellation of `Σ C(m,i) (−x)^{m−i} B*(t^i; x)` in
//! floating point.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{domain, Error, Result};

/// `Σ c_{k,p} x^k u^{−p}` with integer `c_{k,p}`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MomentPoly {
    /// Moment order this polynomial represents.
    pub m: usize,
    /// `(x power k, inverse-u power p) → coefficient`
    pub coeffs: BTreeMap<(u32, u32), i128>,
}

/// `Ω_m(x)` as a polynomial in `x` and `1/u`.
pub type CentralMomentPoly = MomentPoly;

impl MomentPoly {
    pub fn zero(m: usize) -> Self {
        Self { m, coeffs: BTreeMap::new() }
    }

    pub fn one() -> Self {
        let mut p = Self::zero(0);
        p.coeffs.insert((0, 0), 1);
        p
    }

    fn add_term(&mut self, key: (u32, u32), c: i128) -> Result<()> {
        if c == 0 {
            return Ok(());
        }
        let entry = self.coeffs.entry(key).or_insert(0);
        *entry = entry.checked_add(c).ok_or(Error::Overflow(self.m))?;
        if *entry == 0 {
            self.coeffs.remove(&key);
        }
        Ok(())
    }

    /// Evaluates at `(u, x)`.
    pub fn eval(&self, u: f64, x: f64) -> f64 {
        let inv_u = 1.0 / u;
        self.coeffs
            .iter()
            .map(|(&(k, p), &c)| c as f64 * x.powi(k as i32) * inv_u.powi(p as i32))
            .sum()
    }

    /// `d/dx`
    pub fn derivative_x(&self) -> Result<Self> {
        let mut out = Self::zero(self.m);
        for (&(k, p), &c) in &self.coeffs {
            if k > 0 {
                let c = c.checked_mul(k as i128).ok_or(Error::Overflow(self.m))?;
                out.add_term((k - 1, p), c)?;
            }
        }
        Ok(out)
    }

    /// `self · c · x^dk · u^{−dp}`
    fn scaled_shift(&self, c: i128, dk: u32, dp: u32, m: usize) -> Result<Self> {
        let mut out = Self::zero(m);
        for (&(k, p), &v) in &self.coeffs {
            let v = v.checked_mul(c).ok_or(Error::Overflow(m))?;
            out.add_term((k + dk, p + dp), v)?;
        }
        Ok(out)
    }

    fn add_assign(&mut self, other: &Self) -> Result<()> {
        for (&key, &c) in &other.coeffs {
            self.add_term(key, c)?;
        }
        Ok(())
    }

    /// Largest absolute coefficient difference from `other`.
    pub fn max_coeff_diff(&self, other: &Self) -> i128 {
        let keys: std::collections::BTreeSet<_> = self.coeffs.keys().chain(other.coeffs.keys()).collect();
        keys.into_iter()
            .map(|k| {
                let a = self.coeffs.get(k).copied().unwrap_or(0);
                let b = other.coeffs.get(k).copied().unwrap_or(0);
                (a - b).abs()
            })
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for MomentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (i, (&(k, p), &c)) in self.coeffs.iter().rev().enumerate() {
            match (i, c < 0) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let a = c.unsigned_abs();
            match (a, k) {
                (1, 0) => write!(f, "1")?,
                (1, _) => {}
                _ if k == 0 => write!(f, "{a}")?,
                _ => write!(f, "{a}·")?,
            }
            match k {
                0 => {}
                1 => write!(f, "x")?,
                _ => write!(f, "x^{k}")?,
            }
            match p {
                0 => {}
                1 => write!(f, "/u")?,
                _ => write!(f, "/u^{p}")?,
            }
        }
        Ok(())
    }
}

fn binomial(n: usize, k: usize) -> Result<i128> {
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as i128).ok_or(Error::Overflow(n))? / (i as i128 + 1);
    }
    Ok(acc)
}

/// `B*(t^m; x)` as a polynomial.
pub fn raw_moment_poly(m: usize) -> Result<MomentPoly> {
    let mut out = MomentPoly::zero(m);
    // m!/k! = (k+1)(k+2)…m
    for k in 0..=m {
        let mut falling: i128 = 1;
        for i in k + 1..=m {
            falling = falling.checked_mul(i as i128).ok_or(Error::Overflow(m))?;
        }
        let c = binomial(m, k)?.checked_mul(falling).ok_or(Error::Overflow(m))?;
        out.add_term((k as u32, (m - k) as u32), c)?;
    }
    Ok(out)
}

/// `Ω_m(x) = Σ_i C(m,i) (−x)^{m−i} B*(t^i; x)` in exact arithmetic.
pub fn central_moment_poly(m: usize) -> Result<CentralMomentPoly> {
    let mut out = MomentPoly::zero(m);
    for i in 0..=m {
        let sign: i128 = if (m - i).is_multiple_of(2) { 1 } else { -1 };
        let c = binomial(m, i)? * sign;
        let term = raw_moment_poly(i)?.scaled_shift(c, (m - i) as u32, 0, m)?;
        out.add_assign(&term)?;
    }
    Ok(out)
}

fn check_ux(u: f64, x: f64) -> Result<()> {
    if !(u > 0.0) || !u.is_finite() {
        return domain(format!("operator parameter u must be positive and finite, got {u}"));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return domain(format!("evaluation point must be a finite nonnegative real, got {x}"));
    }
    Ok(())
}

/// `B*(t^m; x)`.
pub fn raw_moment(u: f64, x: f64, m: usize) -> Result<f64> {
    check_ux(u, x)?;
    Ok(raw_moment_poly(m)?.eval(u, x))
}

/// `Ω_m(x) = B*((t − x)^m; x)`.
pub fn central_moment(u: f64, x: f64, m: usize) -> Result<f64> {
    check_ux(u, x)?;
    Ok(central_moment_poly(m)?.eval(u, x))
}

/// Which placement of `x` the central-moment recurrence uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecurrenceForm {
    /// `u Ω_{m+1} = x Ω'_m + 2m x Ω_{m−1} + (m+1) Ω_m`
    #[default]
    Corrected,
    /// `u Ω_{m+1} = x (Ω'_m + 2m Ω_{m−1} + (m+1) Ω_m)`, which does not
    /// reproduce `Ω_2 = 2x/u + 2/u²`.
    AsPrinted,
}

/// One step of the recurrence: `(Ω_{m−1}, Ω_m) ↦ Ω_{m+1}`.
/// Pass `MomentPoly::zero` as `prev` for `m = 0`.
pub fn central_moment_recurrence_step(
    prev: &MomentPoly,
    cur: &MomentPoly,
    m: usize,
    form: RecurrenceForm,
) -> Result<MomentPoly> {
    let next = m + 1;
    let d = cur.derivative_x()?;
    let two_m = 2 * m as i128;
    let mut out = MomentPoly::zero(next);
    match form {
        RecurrenceForm::Corrected => {
            out.add_assign(&d.scaled_shift(1, 1, 1, next)?)?;
            out.add_assign(&prev.scaled_shift(two_m, 1, 1, next)?)?;
            out.add_assign(&cur.scaled_shift(m as i128 + 1, 0, 1, next)?)?;
        }
        RecurrenceForm::AsPrinted => {
            out.add_assign(&d.scaled_shift(1, 1, 1, next)?)?;
            out.add_assign(&prev.scaled_shift(two_m, 1, 1, next)?)?;
            out.add_assign(&cur.scaled_shift(m as i128 + 1, 1, 1, next)?)?;
        }
    }
    Ok(out)
}

/// `Ω_0, …, Ω_max_m`, seeded with `Ω_0 = 1`, `Ω_1 = 1/u` and stepped by the
/// recurrence from `m = 1`.
pub fn central_moments_by_recurrence(max_m: usize, form: RecurrenceForm) -> Result<Vec<MomentPoly>> {
    let mut table = vec![MomentPoly::one()];
    if max_m == 0 {
        return Ok(table);
    }
    let mut omega1 = MomentPoly::zero(1);
    omega1.coeffs.insert((0, 1), 1);
    table.push(omega1);
    for m in 1..max_m {
        let next = central_moment_recurrence_step(&table[m - 1], &table[m], m, form)?;
        table.push(next);
    }
    Ok(table)
}

/// `ζ(x) = sqrt(x + 1/u)`, with `Ω_2 = 2ζ²/u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaFactor {
    pub u: f64,
    pub x: f64,
    pub value: f64,
}

impl ZetaFactor {
    pub fn new(u: f64, x: f64) -> Result<Self> {
        check_ux(u, x)?;
        Ok(Self { u, x, value: (x + 1.0 / u).sqrt() })
    }

    pub fn squared(&self) -> f64 {
        self.x + 1.0 / self.u
    }
}

/// Outcome of a log-log slope fit of `|Ω_m(x)|` against `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub m: usize,
    pub x: f64,
    pub exponent: f64,
    /// `−floor((m+1)/2)`
    pub expected: f64,
    pub passes: bool,
}

/// Least-squares slope of `ln|Ω_m(x)|` against `ln u` over `u_grid`.
pub fn decay_order_check(m: usize, x: f64, u_grid: &[f64]) -> Result<DecayReport> {
    if !(x > 0.0) {
        return domain(format!("decay check needs x > 0, got {x}"));
    }
    if u_grid.len() < 2 || u_grid.windows(2).any(|w| !(w[1] > w[0])) || !(u_grid[0] > 0.0) {
        return domain("u grid must be positive and strictly increasing");
    }
    if u_grid[u_grid.len() - 1] / u_grid[0] < 1e3 * (1.0 - 1e-12) {
        return domain("u grid must span at least three decades");
    }
    let poly = central_moment_poly(m)?;
    let pts: Vec<(f64, f64)> = u_grid.iter().map(|&u| (u.ln(), poly.eval(u, x).abs().ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let exponent = sxy / sxx;
    let expected = -(m.div_ceil(2) as f64);
    Ok(DecayReport { m, x, exponent, expected, passes: exponent <= expected + 0.1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn raw_moments_printed_values() {
        assert_eq!(raw_moment(10.0, 1.0, 0).unwrap(), 1.0);
        assert_relative_eq!(raw_moment(10.0, 1.0, 1).unwrap(), 1.1, max_relative = 1e-15);
        assert_relative_eq!(raw_moment(10.0, 1.0, 2).unwrap(), 1.42, max_relative = 1e-15);
        assert_relative_eq!(raw_moment(10.0, 1.0, 3).unwrap(), 2.086, max_relative = 1e-15);
    }

    #[test]
    fn raw_poly_coefficients() {
        let p = raw_moment_poly(3).unwrap();
        assert_eq!(p.coeffs[&(0, 3)], 6);
        assert_eq!(p.coeffs[&(1, 2)], 18);
        assert_eq!(p.coeffs[&(2, 1)], 9);
        assert_eq!(p.coeffs[&(3, 0)], 1);
    }

    #[test]
    fn central_low_orders() {
        assert_eq!(central_moment_poly(0).unwrap(), MomentPoly::one());
        let o1 = central_moment_poly(1).unwrap();
        assert_eq!(o1.coeffs.len(), 1);
        assert_eq!(o1.coeffs[&(0, 1)], 1);
        let o2 = central_moment_poly(2).unwrap();
        assert_eq!(o2.coeffs[&(1, 1)], 2);
        assert_eq!(o2.coeffs[&(0, 2)], 2);
        assert_eq!(o2.coeffs.len(), 2);
        assert_relative_eq!(central_moment(10.0, 1.0, 2).unwrap(), 0.22, max_relative = 1e-15);
    }

    #[test]
    fn recurrence_from_zero_seed() {
        let o1 = central_moment_recurrence_step(
            &MomentPoly::zero(0),
            &MomentPoly::one(),
            0,
            RecurrenceForm::Corrected,
        )
        .unwrap();
        assert_eq!(o1.max_coeff_diff(&central_moment_poly(1).unwrap()), 0);
    }

    #[test]
    fn recurrence_matches_binomial() {
        let table = central_moments_by_recurrence(10, RecurrenceForm::Corrected).unwrap();
        for (m, poly) in table.iter().enumerate() {
            assert_eq!(poly.max_coeff_diff(&central_moment_poly(m).unwrap()), 0, "m = {m}");
        }
    }

    #[test]
    fn printed_recurrence_breaks_at_order_two() {
        let table = central_moments_by_recurrence(2, RecurrenceForm::AsPrinted).unwrap();
        assert_ne!(table[2], central_moment_poly(2).unwrap());
    }

    #[test]
    fn derivative() {
        let p = raw_moment_poly(3).unwrap().derivative_x().unwrap();
        // d/dx (6/u³ + 18x/u² + 9x²/u + x³)
        assert_eq!(p.coeffs[&(0, 2)], 18);
        assert_eq!(p.coeffs[&(1, 1)], 18);
        assert_eq!(p.coeffs[&(2, 0)], 3);
    }

    #[test]
    fn display() {
        assert_eq!(central_moment_poly(2).unwrap().to_string(), "2·x/u + 2/u^2");
        assert_eq!(MomentPoly::zero(3).to_string(), "0");
    }

    #[test]
    fn overflow_reported() {
        assert!(matches!(raw_moment_poly(40), Err(Error::Overflow(_))));
    }

    #[test]
    fn zeta() {
        let z = ZetaFactor::new(100.0, 1.0).unwrap();
        assert_relative_eq!(z.value * z.value, 1.01, max_relative = 1e-15);
        assert_relative_eq!(2.0 * z.squared() / 100.0, central_moment(100.0, 1.0, 2).unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn decay_orders() {
        let grid: Vec<f64> = (0..=12).map(|k| 10f64.powf(2.0 + k as f64 / 3.0)).collect();
        let r1 = decay_order_check(1, 1.0, &grid).unwrap();
        assert_relative_eq!(r1.exponent, -1.0, max_relative = 1e-12);
        let r2 = decay_order_check(2, 1.0, &grid).unwrap();
        assert!((r2.exponent + 1.0).abs() < 0.1 && r2.passes);
        let r4 = decay_order_check(4, 1.0, &grid).unwrap();
        assert!((r4.exponent + 2.0).abs() < 0.1 && r4.passes);
        assert!(decay_order_check(2, 1.0, &[10.0, 100.0]).is_err());
        assert!(decay_order_check(2, 0.0, &grid).is_err());
    }
}
