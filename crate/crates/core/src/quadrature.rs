//! Inner integrals `∫_0^∞ s_{u,j}(t) g(t) dt`.
//!
//! Structured targets (sums of `c t^m e^{at}`) use the Gamma-integral
//! closed form. Everything else goes through Gauss–Laguerre after the
//! substitution `s = u t`, cross-checked against a rule of twice the order,
//! with adaptive Gauss–Kronrod as the fallback.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{domain, Error, Result};
use crate::special::{ln_gamma, poisson_density};
use crate::target::{ExpPolyTerm, TargetFunction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub laguerre_order: usize,
    pub adaptive_tol: f64,
    pub max_refinement_depth: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            laguerre_order: 200,
            adaptive_tol: 1e-12,
            max_refinement_depth: 60,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.laguerre_order < 2 {
            return domain(format!("laguerre_order must be ≥ 2, got {}", self.laguerre_order));
        }
        if !(self.adaptive_tol > 0.0) {
            return domain(format!("adaptive_tol must be positive, got {}", self.adaptive_tol));
        }
        if self.max_refinement_depth == 0 {
            return domain("max_refinement_depth must be positive");
        }
        Ok(())
    }
}

/// A quadrature result with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralEstimate {
    pub value: f64,
    pub error: f64,
}

fn check_u(u: f64) -> Result<()> {
    if !(u > 0.0) || !u.is_finite() {
        return domain(format!("operator parameter u must be positive and finite, got {u}"));
    }
    Ok(())
}

/// ln((j+1)(j+2)…(j+m))
fn ln_rising(j: u64, m: u32) -> f64 {
    if m <= 64 {
        let jf = j as f64;
        (1..=m).map(|i| (jf + i as f64).ln()).sum()
    } else {
        ln_gamma(j as f64 + m as f64 + 1.0) - ln_gamma(j as f64 + 1.0)
    }
}

fn rising(j: u64, m: u32) -> f64 {
    if m <= 16 && j < (1u64 << 53) {
        let jf = j as f64;
        (1..=m).fold(1.0, |acc, i| acc * (jf + i as f64))
    } else {
        ln_rising(j, m).exp()
    }
}

/// `∫_0^∞ s_{u,j}(t) t^m dt = (j+m)! / (j! u^{m+1})`.
pub fn exact_basis_integral_monomial(u: f64, j: u64, m: u32) -> Result<f64> {
    check_u(u)?;
    Ok(exppoly_unchecked(u, j, m, 0.0))
}

/// `∫_0^∞ s_{u,j}(t) t^m e^{at} dt = u^j (j+m)! / (j! (u−a)^{j+m+1})`.
pub fn exact_basis_integral_exppoly(u: f64, j: u64, m: u32, a: f64) -> Result<f64> {
    check_u(u)?;
    if !a.is_finite() {
        return domain(format!("growth rate must be finite, got {a}"));
    }
    if u <= a {
        return Err(Error::DivergentIntegral { u, rate: a });
    }
    Ok(exppoly_unchecked(u, j, m, a))
}

// Caller guarantees u > a, u > 0.
pub(crate) fn exppoly_unchecked(u: f64, j: u64, m: u32, a: f64) -> f64 {
    let v = u - a;
    // (u/(u−a))^j = exp(j · ln1p(a/(u−a)))
    let ln_ratio_pow = if a == 0.0 || j == 0 { 0.0 } else { j as f64 * (a / v).ln_1p() };
    let ln_scale = ln_ratio_pow - (m as f64 + 1.0) * v.ln();
    let r = rising(j, m);
    if r.is_finite() && r > 0.0 {
        r * ln_scale.exp()
    } else {
        (ln_rising(j, m) + ln_scale).exp()
    }
}

/// Sum of exact inner integrals over the terms of an exp-poly target.
pub(crate) fn exact_terms_integral(u: f64, j: u64, terms: &[ExpPolyTerm]) -> f64 {
    terms
        .iter()
        .filter(|e| e.coeff != 0.0)
        .map(|e| e.coeff * exppoly_unchecked(u, j, e.power, e.rate))
        .sum()
}

/// The inner integral of `g` at index `j`, via the exact path when `g` has
/// closed form and numerically otherwise.
pub fn basis_integral(u: f64, j: u64, g: &TargetFunction, cfg: &QuadratureConfig) -> Result<IntegralEstimate> {
    check_u(u)?;
    let rate = g.growth_rate();
    if u <= rate {
        return Err(Error::DivergentIntegral { u, rate });
    }
    match g.exp_poly_terms() {
        Some(terms) => {
            let value = exact_terms_integral(u, j, &terms);
            let scale: f64 = terms
                .iter()
                .map(|e| (e.coeff * exppoly_unchecked(u, j, e.power, e.rate)).abs())
                .sum();
            Ok(IntegralEstimate { value, error: 8.0 * f64::EPSILON * scale })
        }
        None => numeric_basis_integral(u, j, g, cfg),
    }
}

// ---------------------------------------------------------------------------
// Gauss–Laguerre

/// Nodes and log-weights of an `n`-point Gauss–Laguerre rule (weight `e^{-s}`).
#[derive(Debug)]
pub struct GaussLaguerre {
    pub nodes: Vec<f64>,
    pub ln_weights: Vec<f64>,
}

impl GaussLaguerre {
    /// Newton iteration on the three-term recurrence, rescaled so that the
    /// polynomial values do not overflow at the largest nodes.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return domain("Gauss–Laguerre order must be ≥ 2");
        }
        let nf = n as f64;
        let mut nodes = vec![0.0; n];
        let mut ln_weights = vec![0.0; n];
        let mut z = 0.0f64;
        for i in 0..n {
            if i == 0 {
                z = 3.0 / (1.0 + 2.4 * nf);
            } else if i == 1 {
                z += 15.0 / (1.0 + 2.5 * nf);
            } else {
                let ai = (i - 1) as f64;
                z += (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2]);
            }
            let mut converged = false;
            for _ in 0..200 {
                let (p1, pp) = laguerre_newton_terms(n, z);
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-13 * z.max(1.0) {
                    // one polishing step
                    let (p1, pp) = laguerre_newton_terms(n, z);
                    z -= p1 / pp;
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::ConvergenceFailure(format!(
                    "Gauss–Laguerre node {i} of order {n} did not converge"
                )));
            }
            nodes[i] = z;
            ln_weights[i] = laguerre_ln_weight(n, z);
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::ConvergenceFailure(format!(
                    "Gauss–Laguerre order {n}: nodes not strictly increasing"
                )));
            }
        }
        Ok(Self { nodes, ln_weights })
    }

    /// Shared, lazily built rule of order `n`.
    pub fn cached(n: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLaguerre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&n) {
            return Ok(Arc::clone(rule));
        }
        let rule = Arc::new(Self::new(n)?);
        cache
            .lock()
            .expect("rule cache poisoned")
            .entry(n)
            .or_insert_with(|| Arc::clone(&rule));
        Ok(rule)
    }

    /// `∫_0^∞ e^{-s} s^j / j! · f(s) ds`
    pub fn integrate_poisson(&self, j: u64, f: impl Fn(f64) -> f64) -> f64 {
        let jf = j as f64;
        let lnf = ln_gamma(jf + 1.0);
        self.nodes
            .iter()
            .zip(&self.ln_weights)
            .map(|(&s, &lw)| {
                let lw = lw + jf * s.ln() - lnf;
                if lw < -745.0 {
                    0.0
                } else {
                    lw.exp() * f(s)
                }
            })
            .sum()
    }
}

// (L_n(z), L_n'(z)) up to a common positive scale.
fn laguerre_newton_terms(n: usize, z: f64) -> (f64, f64) {
    let (p, dp, _) = laguerre_recurrence(n, z);
    (p, dp)
}

// (p, p', ln scale) with L_n(z) = p·e^{scale}, L_n'(z) = p'·e^{scale}.
fn laguerre_recurrence(n: usize, z: f64) -> (f64, f64, f64) {
    let (mut p1, mut p2) = (1.0f64, 0.0f64);
    let (mut d1, mut d2) = (0.0f64, 0.0f64);
    let mut ln_scale = 0.0;
    for k in 1..=n {
        let kf = k as f64;
        let (p3, d3) = (p2, d2);
        p2 = p1;
        d2 = d1;
        p1 = ((2.0 * kf - 1.0 - z) * p2 - (kf - 1.0) * p3) / kf;
        d1 = ((2.0 * kf - 1.0 - z) * d2 - p2 - (kf - 1.0) * d3) / kf;
        if p1.abs().max(d1.abs()) > 1e150 {
            p1 *= 1e-150;
            p2 *= 1e-150;
            d1 *= 1e-150;
            d2 *= 1e-150;
            ln_scale += 150.0 * std::f64::consts::LN_10;
        }
    }
    (p1, d1, ln_scale)
}

// w = 1 / (z · L_n'(z)²)
fn laguerre_ln_weight(n: usize, z: f64) -> f64 {
    let (_, dp, ln_scale) = laguerre_recurrence(n, z);
    -z.ln() - 2.0 * (dp.abs().ln() + ln_scale)
}

// ---------------------------------------------------------------------------
// Adaptive Gauss–Kronrod (7/15)

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
    depth: u32,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64, depth: u32) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = fc.abs() * WGK[7];
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for i in 0..7 {
        let dx = h * XGK[i];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv1[i] = f1;
        fv2[i] = f2;
        resk += WGK[i] * (f1 + f2);
        resabs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            resg += WG[i / 2] * (f1 + f2);
        }
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for i in 0..7 {
        resasc += WGK[i] * ((fv1[i] - reskh).abs() + (fv2[i] - reskh).abs());
    }
    let value = resk * h;
    let resabs = resabs * h.abs();
    let resasc = resasc * h.abs();
    let mut error = ((resk - resg) * h).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Segment { a, b, value, error, abs: resabs, depth }
}

/// Globally adaptive 7/15-point Gauss–Kronrod over `[points[0], points[last]]`,
/// with the interior points as initial splits.
pub fn adaptive_integrate(
    f: impl Fn(f64) -> f64,
    points: &[f64],
    rel_tol: f64,
    max_depth: u32,
) -> Result<IntegralEstimate> {
    if points.len() < 2 {
        return domain("adaptive_integrate needs at least two points");
    }
    const MAX_SEGMENTS: usize = 50_000;
    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&f, w[0], w[1], 0));
        }
    }
    loop {
        let (value, error, abs) = heap
            .iter()
            .fold((0.0, 0.0, 0.0), |acc, s| (acc.0 + s.value, acc.1 + s.error, acc.2 + s.abs));
        // Below ~100 ulp of ∫|f| the estimate is roundoff, not truncation.
        let target = (rel_tol * value.abs()).max(rel_tol * 1e-3 * abs).max(100.0 * f64::EPSILON * abs);
        if error <= target || abs == 0.0 {
            return Ok(IntegralEstimate { value, error });
        }
        let worst = heap.pop().expect("nonempty segment heap");
        if worst.depth >= max_depth || heap.len() >= MAX_SEGMENTS {
            return Err(Error::ConvergenceFailure(format!(
                "adaptive quadrature stalled on [{}, {}] at depth {} (error {:e} > target {:e})",
                worst.a, worst.b, worst.depth, error, target
            )));
        }
        let mid = 0.5 * (worst.a + worst.b);
        heap.push(gk15(&f, worst.a, mid, worst.depth + 1));
        heap.push(gk15(&f, mid, worst.b, worst.depth + 1));
    }
}

/// `∫_0^∞ s_{u,j}(t) g(t) dt` by quadrature, whatever the form of `g`.
///
/// Gauss–Laguerre of order `n` and `2n` in the variable `s = u t`; if they
/// disagree beyond `adaptive_tol` (relative), adaptive Gauss–Kronrod over a
/// window around the peak of `e^{-s} s^j` decides.
pub fn numeric_basis_integral(
    u: f64,
    j: u64,
    g: &TargetFunction,
    cfg: &QuadratureConfig,
) -> Result<IntegralEstimate> {
    check_u(u)?;
    cfg.validate()?;
    let rate = g.growth_rate();
    if u <= rate {
        return Err(Error::DivergentIntegral { u, rate });
    }
    let h = |s: f64| g.eval(s / u);

    let lo = GaussLaguerre::cached(cfg.laguerre_order)?;
    let hi = GaussLaguerre::cached(2 * cfg.laguerre_order)?;
    let q1 = lo.integrate_poisson(j, h);
    let q2 = hi.integrate_poisson(j, h);
    let diff = (q2 - q1).abs();
    if q1.is_finite() && q2.is_finite() && diff <= cfg.adaptive_tol * q2.abs() {
        return Ok(IntegralEstimate { value: q2 / u, error: diff / u });
    }

    // The integrand e^{-s} s^j/j! · g(s/u) peaks near j/(1 − a⁺/u).
    let damp = 1.0 - rate.max(0.0) / u;
    let jf = j as f64;
    let peak = jf / damp;
    let sd = (jf + 1.0).sqrt() / damp;
    let end = peak + 60.0 * sd + 800.0 / damp;
    let mut points = vec![0.0];
    for p in [peak - 8.0 * sd, peak, peak + 8.0 * sd] {
        if p > 0.0 && p < end {
            points.push(p);
        }
    }
    for &bp in g.breakpoints() {
        let s = bp * u;
        if s > 0.0 && s < end {
            points.push(s);
        }
    }
    points.push(end);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let integrand = |s: f64| {
        let w = poisson_density(jf, s);
        if w == 0.0 {
            0.0
        } else {
            w * h(s)
        }
    };
    let est = adaptive_integrate(integrand, &points, cfg.adaptive_tol, cfg.max_refinement_depth)?;
    Ok(IntegralEstimate { value: est.value / u, error: est.error / u })
}
