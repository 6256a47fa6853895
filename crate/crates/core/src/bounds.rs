//! Grid estimators for moduli of smoothness, the Lipschitz maximal function
//! and total variation, and calculators for the operator's error bounds.
//!
//! Every estimator is a sup (or sum) over a finite grid and therefore
//! approaches the true quantity from below as the grid is refined. The
//! bound calculators report their components; constants the theory leaves
//! unspecified are left to the caller.

use std::sync::Arc;

use crate::basis::TruncationSpec;
use crate::error::{domain, Result};
use crate::moments::{central_moment, ZetaFactor};
use crate::operator::apply;
use crate::quadrature::QuadratureConfig;
use crate::target::{EvalFn, TargetFunction};

/// Right end of the default estimation window `[0, max(2.5, x) + 4δ]`.
pub fn default_window(x: f64, delta: f64) -> (f64, f64) {
    (0.0, x.max(2.5) + 4.0 * delta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusEstimate {
    pub delta: f64,
    pub value: f64,
    pub grid_step: f64,
    pub domain: (f64, f64),
}

fn check_grid(delta: f64, domain: (f64, f64), step: f64) -> Result<usize> {
    if !(delta > 0.0) || !delta.is_finite() {
        return self::domain(format!("delta must be positive, got {delta}"));
    }
    if !(step > 0.0) || step > delta / 8.0 * (1.0 + 1e-12) {
        return self::domain(format!("grid step must lie in (0, delta/8], got {step} for delta {delta}"));
    }
    if !(domain.1 > domain.0) || !domain.0.is_finite() || !domain.1.is_finite() {
        return self::domain(format!("empty domain [{}, {}]", domain.0, domain.1));
    }
    Ok(((domain.1 - domain.0) / step + 1e-9).floor() as usize)
}

fn sample(g: &impl Fn(f64) -> f64, domain: (f64, f64), step: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| g(domain.0 + i as f64 * step)).collect()
}

/// `ω(g, δ) = sup{|g(y) − g(x)| : |y − x| ≤ δ}` over a grid on `domain`.
pub fn modulus(g: impl Fn(f64) -> f64, delta: f64, domain: (f64, f64), step: f64) -> Result<ModulusEstimate> {
    let n = check_grid(delta, domain, step)?;
    let vals = sample(&g, domain, step, n);
    let reach = (delta / step + 1e-9).floor() as usize;
    let mut best = 0.0f64;
    for i in 0..=n {
        for k in i + 1..=(i + reach).min(n) {
            best = best.max((vals[k] - vals[i]).abs());
        }
    }
    Ok(ModulusEstimate { delta, value: best, grid_step: step, domain })
}

/// `ω₂(g, δ) = sup{|g(x+h) − 2g(x) + g(x−h)| : 0 ≤ h ≤ δ}` over a grid.
pub fn second_modulus(
    g: impl Fn(f64) -> f64,
    delta: f64,
    domain: (f64, f64),
    step: f64,
) -> Result<ModulusEstimate> {
    let n = check_grid(delta, domain, step)?;
    let vals = sample(&g, domain, step, n);
    let reach = (delta / step + 1e-9).floor() as usize;
    let mut best = 0.0f64;
    for i in 1..n {
        let kmax = reach.min(i).min(n - i);
        for k in 1..=kmax {
            best = best.max((vals[i + k] - 2.0 * vals[i] + vals[i - k]).abs());
        }
    }
    Ok(ModulusEstimate { delta, value: best, grid_step: step, domain })
}

/// Components of the second-modulus error bound
/// `|B*(g;x) − g(x)| ≤ C ω₂(g, sqrt(δ_n)/2) + ω(g, γ_n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KFunctionalBound {
    /// `ω₂(g, sqrt(δ_n)/2)`
    pub omega2_component: f64,
    /// `ω(g, γ_n)`
    pub omega_component: f64,
    /// `Ω_2(x) + 1/u²`
    pub delta_n: f64,
    /// `Ω_1 = 1/u`
    pub gamma_n: f64,
}

impl KFunctionalBound {
    pub fn combined(&self, c: f64) -> f64 {
        c * self.omega2_component + self.omega_component
    }
}

/// Evaluates both moduli at the arguments the bound calls for. `domain`
/// defaults to [`default_window`] per modulus; grid steps are `δ/64`.
pub fn kfunctional_bound(
    g: &TargetFunction,
    u: f64,
    x: f64,
    domain: Option<(f64, f64)>,
) -> Result<KFunctionalBound> {
    let delta_n = central_moment(u, x, 2)? + 1.0 / (u * u);
    let gamma_n = 1.0 / u;
    let h2 = delta_n.sqrt() / 2.0;
    let f = |t: f64| g.eval(t);
    let w2 = second_modulus(f, h2, domain.unwrap_or_else(|| default_window(x, h2)), h2 / 64.0)?;
    let w1 = modulus(f, gamma_n, domain.unwrap_or_else(|| default_window(x, gamma_n)), gamma_n / 64.0)?;
    Ok(KFunctionalBound {
        omega2_component: w2.value,
        omega_component: w1.value,
        delta_n,
        gamma_n,
    })
}

/// `τ_s(g, x) = sup_{t ≠ x} |g(t) − g(x)| / |t − x|^s` over a grid on `domain`
/// (plus the point `x` itself as the reference).
pub fn lipschitz_maximal(
    g: impl Fn(f64) -> f64,
    s: f64,
    x: f64,
    domain: (f64, f64),
    step: f64,
) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return self::domain(format!("Lipschitz order must lie in (0,1], got {s}"));
    }
    if !(step > 0.0) || !(domain.1 > domain.0) {
        return self::domain("invalid grid for the Lipschitz maximal function");
    }
    let gx = g(x);
    let n = ((domain.1 - domain.0) / step + 1e-9).floor() as usize;
    let mut best = 0.0f64;
    for i in 0..=n {
        let t = domain.0 + i as f64 * step;
        let d = (t - x).abs();
        if d > 1e-12 * x.abs().max(1.0) {
            best = best.max((g(t) - gx).abs() / d.powf(s));
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    /// `|B*(g;x) − g(x)|`
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

const GRID_POINTS: f64 = 20_000.0;

/// Compares `|B*(g;x) − g(x)|` with `τ_s(g,x) · Ω_2^{s/2}`.
pub fn lipschitz_bound_check(g: &TargetFunction, s: f64, u: f64, x: f64) -> Result<BoundCheck> {
    let cfg = QuadratureConfig::default();
    let v = apply(g, u, x, TruncationSpec::default(), &cfg)?;
    let lhs = (v.value - g.eval(x)).abs();
    let window = (0.0, 2.0 * x.max(2.5));
    let tau = lipschitz_maximal(|t| g.eval(t), s, x, window, window.1 / GRID_POINTS)?;
    let rhs = tau * central_moment(u, x, 2)?.powf(s / 2.0);
    let tol = 1e-12 + v.tail_bound + v.inner_integral_error;
    Ok(BoundCheck { lhs, rhs, holds: lhs <= rhs + tol })
}

/// `M (Ω_2 / (x (x m1 + m2)))^{s/2}` for targets in the weighted Lipschitz
/// class with parameters `m1`, `m2`.
pub fn lip_space_bound(big_m: f64, m1: f64, m2: f64, s: f64, u: f64, x: f64) -> Result<f64> {
    if !(big_m > 0.0) {
        return domain(format!("M must be positive, got {big_m}"));
    }
    if !(s > 0.0 && s <= 1.0) {
        return domain(format!("Lipschitz order must lie in (0,1], got {s}"));
    }
    if !(x > 0.0) {
        return domain(format!("bound is vacuous at x = {x}"));
    }
    let denom = x * (x * m1 + m2);
    if !(denom > 0.0) {
        return domain(format!("x (x m1 + m2) = {denom} is not positive"));
    }
    Ok(big_m * (central_moment(u, x, 2)? / denom).powf(s / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalVariationEstimate {
    pub interval: (f64, f64),
    pub value: f64,
    pub samples: usize,
}

/// `V_a^b f` over a uniform partition with `samples` points, refined within
/// `1e-6` of each breakpoint inside `[a, b]`.
pub fn total_variation(
    f: impl Fn(f64) -> f64,
    interval: (f64, f64),
    samples: usize,
    breakpoints: &[f64],
) -> Result<TotalVariationEstimate> {
    let (a, b) = interval;
    if samples < 2 {
        return domain(format!("total variation needs at least 2 samples, got {samples}"));
    }
    if !(b >= a) || !a.is_finite() || !b.is_finite() {
        return domain(format!("invalid interval [{a}, {b}]"));
    }
    if b == a {
        return Ok(TotalVariationEstimate { interval, value: 0.0, samples });
    }
    let h = (b - a) / (samples - 1) as f64;
    let mut pts: Vec<f64> = (0..samples).map(|i| a + i as f64 * h).collect();
    pts[samples - 1] = b;
    for &bp in breakpoints {
        for p in [bp - 1e-6, bp - 1e-9, bp, bp + 1e-9, bp + 1e-6] {
            if p > a && p < b {
                pts.push(p);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let vals: Vec<f64> = pts.iter().map(|&t| f(t)).collect();
    let value = vals.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    Ok(TotalVariationEstimate { interval, value, samples: pts.len() })
}

/// A target whose derivative has bounded variation, with its one-sided
/// derivatives and the points where they differ.
#[derive(Clone)]
pub struct DbvSpec {
    pub g: TargetFunction,
    pub gprime_left: EvalFn,
    pub gprime_right: EvalFn,
    pub breakpoints: Vec<f64>,
}

impl std::fmt::Debug for DbvSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DbvSpec")
            .field("g", &self.g)
            .field("breakpoints", &self.breakpoints)
            .finish_non_exhaustive()
    }
}

impl DbvSpec {
    /// `g(t) = a + b t`
    pub fn affine(a: f64, b: f64) -> Self {
        let g = TargetFunction::MonomialSum(vec![
            crate::target::MonomialTerm { coeff: a, power: 0 },
            crate::target::MonomialTerm { coeff: b, power: 1 },
        ]);
        Self {
            g,
            gprime_left: Arc::new(move |_| b),
            gprime_right: Arc::new(move |_| b),
            breakpoints: Vec::new(),
        }
    }

    /// `g(t) = |t − c|`
    pub fn abs_kink(c: f64) -> Self {
        let g = TargetFunction::black_box(
            format!("|t-{c}|"),
            crate::target::GrowthBound { scale: 1.0 + c.abs(), power: 1, rate: 0.0 },
            move |t| (t - c).abs(),
        )
        .with_breakpoints(vec![c]);
        Self {
            g,
            gprime_left: Arc::new(move |t| if t <= c { -1.0 } else { 1.0 }),
            gprime_right: Arc::new(move |t| if t < c { -1.0 } else { 1.0 }),
            breakpoints: vec![c],
        }
    }

    /// A differentiable exponential-polynomial target, with its derivative
    /// taken term by term.
    pub fn smooth(g: TargetFunction) -> Result<Self> {
        let Some(terms) = g.exp_poly_terms() else {
            return domain("derivative is only known for exponential-polynomial targets");
        };
        let d: EvalFn = Arc::new(move |t: f64| {
            terms
                .iter()
                .map(|c| {
                    let m = c.power as i32;
                    let poly = if m == 0 { 0.0 } else { m as f64 * t.powi(m - 1) } + c.rate * t.powi(m);
                    c.coeff * poly * (c.rate * t).exp()
                })
                .sum()
        });
        Ok(Self { g, gprime_left: d.clone(), gprime_right: d, breakpoints: Vec::new() })
    }

    /// `g'(t)`, taken as the mean of the one-sided values at a breakpoint.
    pub fn derivative(&self, t: f64) -> f64 {
        let l = (self.gprime_left)(t);
        let r = (self.gprime_right)(t);
        if l == r {
            l
        } else {
            0.5 * (l + r)
        }
    }

    /// The recentred derivative `g'_x`: `g'(t) − g'(x−)` left of `x`,
    /// `0` at `x`, `g'(t) − g'(x+)` right of `x`.
    pub fn auxiliary_derivative(&self, x: f64) -> impl Fn(f64) -> f64 + '_ {
        let left = (self.gprime_left)(x);
        let right = (self.gprime_right)(x);
        move |t| {
            if t < x {
                self.derivative(t) - left
            } else if t > x {
                self.derivative(t) - right
            } else {
                0.0
            }
        }
    }
}

/// The six summands of the bounded-variation error bound, in order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbvBound {
    pub total: f64,
    pub terms: [f64; 6],
}

const TV_SAMPLES: usize = 2001;

/// Evaluates the bounded-variation bound at `(u, x)`. The variation sums
/// run over `j = 1..=floor(sqrt(u))`.
pub fn dbv_bound(spec: &DbvSpec, u: f64, x: f64) -> Result<DbvBound> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("bounded-variation bound needs x > 0, got {x}"));
    }
    if !(u > 1.0) || !u.is_finite() {
        return domain(format!("bounded-variation bound needs u > 1, got {u}"));
    }
    let zeta = ZetaFactor::new(u, x)?;
    let z2 = zeta.squared();
    let d_right = (spec.gprime_right)(x);
    let d_left = (spec.gprime_left)(x);
    let gx = spec.auxiliary_derivative(x);
    let mut bps = spec.breakpoints.clone();
    bps.push(x);
    let tv = |a: f64, b: f64| -> Result<f64> { Ok(total_variation(&gx, (a.max(0.0), b), TV_SAMPLES, &bps)?.value) };

    let su = u.sqrt();
    let jmax = su.floor() as u64;
    let weight = 2.0 * z2 / (x * u);
    let mut left_sum = 0.0;
    let mut right_sum = 0.0;
    for j in 1..=jmax {
        let h = x / j as f64;
        left_sum += tv(x - h, x)?;
        right_sum += tv(x, x + h)?;
    }
    let h = x / su;
    let terms = [
        (d_right + d_left).abs() / (2.0 * u),
        (1.0 / (2.0 * u)).sqrt() * (d_right - d_left).abs() * zeta.value,
        weight * left_sum,
        x / su * tv(x - h, x)?,
        x / su * tv(x, x + h)?,
        weight * right_sum,
    ];
    Ok(DbvBound { total: terms.iter().sum(), terms })
}

/// Compares `|B*(g;x) − g(x)|` with [`dbv_bound`].
pub fn dbv_empirical_check(spec: &DbvSpec, u: f64, x: f64) -> Result<BoundCheck> {
    let bound = dbv_bound(spec, u, x)?;
    let v = apply(&spec.g, u, x, TruncationSpec::default(), &QuadratureConfig::default())?;
    let lhs = (v.value - spec.g.eval(x)).abs();
    let tol = 1e-12 + v.tail_bound + v.inner_integral_error;
    Ok(BoundCheck { lhs, rhs: bound.total, holds: lhs <= bound.total + tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn modulus_examples() {
        let w = modulus(|_| 3.0, 0.1, (0.0, 10.0), 0.1 / 64.0).unwrap();
        assert_eq!(w.value, 0.0);
        let w = modulus(|t| t, 0.1, (0.0, 10.0), 0.1 / 64.0).unwrap();
        assert!((w.value - 0.1).abs() <= w.grid_step);
        let w = modulus(|t: f64| (-t).exp(), 0.1, (0.0, 10.0), 0.1 / 64.0).unwrap();
        assert!((w.value - 0.095_162_6).abs() <= w.grid_step);
        assert!(modulus(|t| t, 0.1, (0.0, 10.0), 0.1).is_err());
    }

    #[test]
    fn second_modulus_examples() {
        let w = second_modulus(|t| 2.0 * t - 1.0, 0.3, (0.0, 5.0), 0.3 / 64.0).unwrap();
        assert!(w.value < 1e-12);
        let w = second_modulus(|t| t * t, 0.25, (0.0, 5.0), 0.25 / 64.0).unwrap();
        assert_relative_eq!(w.value, 2.0 * 0.25 * 0.25, max_relative = 1e-9);
        let w = second_modulus(|t: f64| (-t).exp(), 0.2, (0.0, 10.0), 0.2 / 64.0).unwrap();
        assert!((w.value - (1.0 - (-0.2f64).exp()).powi(2)).abs() <= 1e-12);
    }

    #[test]
    fn kfunctional_components() {
        let k = kfunctional_bound(&TargetFunction::constant(2.0), 100.0, 1.0, None).unwrap();
        assert_eq!(k.omega2_component, 0.0);
        assert_eq!(k.omega_component, 0.0);
        let k = kfunctional_bound(&TargetFunction::builtin("expneg").unwrap(), 100.0, 1.0, None).unwrap();
        assert_relative_eq!(k.delta_n, 0.0203, max_relative = 1e-13);
        assert_relative_eq!(k.gamma_n, 0.01, max_relative = 1e-15);
        // ω(e^{-t}, 0.01) = 1 − e^{-0.01}, attained at 0
        assert_relative_eq!(k.omega_component, 1.0 - (-0.01f64).exp(), max_relative = 1e-12);
        assert!(k.combined(1.0) > k.omega_component);
    }

    #[test]
    fn lipschitz_maximal_examples() {
        let dom = (0.0, 5.0);
        assert_relative_eq!(lipschitz_maximal(|t| t, 1.0, 1.3, dom, 1e-3).unwrap(), 1.0, max_relative = 1e-9);
        assert_eq!(lipschitz_maximal(|_| 1.0, 0.5, 1.3, dom, 1e-3).unwrap(), 0.0);
        let tau = lipschitz_maximal(|t: f64| (-t).exp(), 1.0, 1.0, dom, 1e-3).unwrap();
        assert_relative_eq!(tau, 1.0 - (-1.0f64).exp(), max_relative = 1e-12);
        assert!(lipschitz_maximal(|t| t, 0.0, 1.0, dom, 1e-3).is_err());
    }

    #[test]
    fn lipschitz_check_identity() {
        let c = lipschitz_bound_check(&TargetFunction::monomial(1), 1.0, 50.0, 2.0).unwrap();
        assert_relative_eq!(c.lhs, 0.02, max_relative = 1e-12);
        assert_relative_eq!(c.rhs, (2.0 * 101.0 / 2500.0f64).sqrt(), max_relative = 1e-9);
        assert!(c.holds);
        let c = lipschitz_bound_check(&TargetFunction::constant(4.0), 1.0, 50.0, 2.0).unwrap();
        assert!(c.lhs <= 1e-12 && c.rhs == 0.0 && c.holds);
    }

    #[test]
    fn lip_space_examples() {
        assert_relative_eq!(lip_space_bound(1.0, 0.0, 1.0, 1.0, 10.0, 1.0).unwrap(), 0.22f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(lip_space_bound(1.0, 1.0, 0.0, 1.0, 100.0, 1.0).unwrap(), 0.0202f64.sqrt(), max_relative = 1e-14);
        assert!(lip_space_bound(1.0, 1.0, 0.0, 1.0, 100.0, 0.0).is_err());
        assert!(lip_space_bound(1.0, -1.0, 0.5, 1.0, 100.0, 1.0).is_err());
    }

    #[test]
    fn total_variation_examples() {
        let tv = total_variation(|t: f64| t.powi(3), (-1.0, 2.0), 10, &[]).unwrap();
        assert!((tv.value - 9.0).abs() <= 1e-12);
        let tv = total_variation(|t: f64| (t - 1.0).signum() * (t != 1.0) as i32 as f64, (0.0, 2.0), 100, &[1.0]).unwrap();
        assert!((tv.value - 2.0).abs() <= 1e-12);
        let spec = DbvSpec::abs_kink(1.0);
        let aux = spec.auxiliary_derivative(1.0);
        assert_eq!(total_variation(&aux, (0.5, 1.5), 1000, &[1.0]).unwrap().value, 0.0);
        assert!(total_variation(|t| t, (0.0, 1.0), 1, &[]).is_err());
    }

    #[test]
    fn dbv_affine_attained() {
        let spec = DbvSpec::affine(0.5, -3.0);
        let b = dbv_bound(&spec, 100.0, 1.2).unwrap();
        assert_relative_eq!(b.terms[0], 3.0 / 100.0, max_relative = 1e-15);
        assert!(b.terms[1..].iter().all(|&t| t == 0.0));
        assert_eq!(b.total, b.terms.iter().sum::<f64>());
        let c = dbv_empirical_check(&spec, 100.0, 1.2).unwrap();
        assert_relative_eq!(c.lhs, 0.03, max_relative = 1e-10);
        assert!(c.holds);
    }

    #[test]
    fn smooth_spec_derivative() {
        let spec = DbvSpec::smooth(TargetFunction::exp_poly(1.0, 2, 2.0)).unwrap();
        let t: f64 = 0.7;
        assert_relative_eq!(spec.derivative(t), (2.0 * t + 2.0 * t * t) * (2.0 * t).exp(), max_relative = 1e-14);
        let lin = DbvSpec::smooth(TargetFunction::monomial(1)).unwrap();
        assert_eq!(lin.derivative(3.0), 1.0);
        assert!(DbvSpec::smooth(TargetFunction::builtin("abs1").unwrap()).is_err());
        let b = dbv_bound(&spec, 100.0, 1.0).unwrap();
        assert!(b.terms[1] == 0.0 && b.total > 0.0);
        assert!(dbv_empirical_check(&spec, 100.0, 1.0).unwrap().holds);
    }

    #[test]
    fn dbv_kink_terms() {
        let spec = DbvSpec::abs_kink(1.0);
        let b = dbv_bound(&spec, 400.0, 1.0).unwrap();
        assert_eq!(b.terms[0], 0.0);
        let zeta = (1.0f64 + 1.0 / 400.0).sqrt();
        assert_relative_eq!(b.terms[1], (1.0f64 / 800.0).sqrt() * 2.0 * zeta, max_relative = 1e-14);
        assert_eq!(b.terms[2..], [0.0; 4]);
        assert!(dbv_bound(&spec, 400.0, 0.0).is_err());
    }
}
