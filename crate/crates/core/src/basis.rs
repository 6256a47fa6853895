//! The Szász basis `s_{u,j}(x) = e^{-ux} (ux)^j / j!` and series truncation.

use crate::error::{domain, Result};
use crate::special::poisson_density;

/// Default tail mass for library-level evaluations.
pub const DEFAULT_TAIL_EPS: f64 = 1e-14;

/// Weights below this fraction of the modal weight are dropped from the
/// lower end of a sweep; their total mass is accounted for separately.
pub(crate) const LOWER_CUTOFF_REL: f64 = 1e-40;

/// A single evaluation point of the basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisPoint {
    pub u: f64,
    pub j: u64,
    pub x: f64,
}

impl BasisPoint {
    pub fn new(u: f64, j: u64, x: f64) -> Result<Self> {
        check_ux(u, x)?;
        Ok(Self { u, j, x })
    }
}

/// How the infinite series over `j` is cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationSpec {
    /// Keep terms until the neglected Poisson mass (and the neglected share
    /// of the series value) is at most `eps`.
    TailEpsilon(f64),
    /// Keep exactly the terms `j = 0..=J`.
    FixedJ(u64),
}

impl Default for TruncationSpec {
    fn default() -> Self {
        TruncationSpec::TailEpsilon(DEFAULT_TAIL_EPS)
    }
}

impl TruncationSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TruncationSpec::TailEpsilon(eps) if !(eps > 0.0 && eps < 1.0) => {
                domain(format!("tail epsilon must lie in (0,1), got {eps}"))
            }
            _ => Ok(()),
        }
    }
}

pub(crate) fn check_ux(u: f64, x: f64) -> Result<()> {
    if !(u > 0.0) || !u.is_finite() {
        return domain(format!("operator parameter u must be positive and finite, got {u}"));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return domain(format!("evaluation point must be a finite nonnegative real, got {x}"));
    }
    Ok(())
}

/// `s_{u,j}(x)`.
///
/// Evaluated in log space through the saddle-point form of the Poisson
/// mass, so neither `(ux)^j` nor `j!` is ever formed. `x = 0` gives exactly
/// 1 for `j = 0` and exactly 0 otherwise.
pub fn szasz_weight(p: BasisPoint) -> Result<f64> {
    check_ux(p.u, p.x)?;
    Ok(poisson_density(p.j as f64, p.u * p.x))
}

/// Smallest `J` with `Σ_{j>J} s_{u,j}(x) ≤ eps`, never below `ceil(ux)`.
pub fn truncation_index(u: f64, x: f64, eps: f64) -> Result<u64> {
    check_ux(u, x)?;
    if !(eps > 0.0 && eps < 1.0) {
        return domain(format!("tail epsilon must lie in (0,1), got {eps}"));
    }
    let lambda = u * x;
    if lambda == 0.0 {
        return Ok(0);
    }
    let floor_j = lambda.ceil() as u64;

    // Walk up from the mode until the remaining mass is certainly below
    // eps/1e6, then sum the tail back down.
    let mode = lambda.floor() as u64;
    let mut w = poisson_density(mode as f64, lambda);
    let mut upper = vec![w];
    let mut j = mode;
    loop {
        let ratio = lambda / (j + 1) as f64;
        if ratio < 0.5 && w < eps * 1e-6 {
            break;
        }
        j += 1;
        w *= ratio;
        upper.push(w);
    }
    // Σ_{k>j} w_k ≤ w_j · q/(1−q) with q = λ/(j+1) < ½.
    let q = lambda / (j + 1) as f64;
    let mut tail = w * q / (1.0 - q);
    let mut cut = j;
    while cut > mode {
        let wj = upper[(cut - mode) as usize];
        if tail + wj > eps {
            return Ok(cut.max(floor_j));
        }
        tail += wj;
        cut -= 1;
    }
    // The whole upper half fits under eps; continue below the mode.
    let mut wj = upper[0];
    loop {
        if tail + wj > eps || cut == 0 {
            return Ok(cut.max(floor_j));
        }
        tail += wj;
        wj *= cut as f64 / lambda;
        cut -= 1;
    }
}

/// Index below which the Poisson(λ) weights are under `rel` times the
/// modal weight. Zero for small `λ`.
pub(crate) fn lower_cutoff(lambda: f64, rel: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let mode = lambda.floor() as u64;
    let mut j = mode;
    let mut ratio_acc = 1.0;
    while j > 0 {
        // w_{j-1}/w_j = j/λ
        ratio_acc *= j as f64 / lambda;
        if ratio_acc < rel {
            return j;
        }
        j -= 1;
    }
    0
}

/// Poisson(λ) weights for `j ∈ [lo, hi]`, anchored at the mode (or the
/// nearest end of the range) and filled by the ratio recurrence.
pub(crate) fn poisson_weights(lambda: f64, lo: u64, hi: u64) -> Vec<f64> {
    debug_assert!(lo <= hi);
    let len = (hi - lo + 1) as usize;
    let mut out = vec![0.0; len];
    if lambda == 0.0 {
        if lo == 0 {
            out[0] = 1.0;
        }
        return out;
    }
    let anchor = (lambda.floor() as u64).clamp(lo, hi);
    let a = (anchor - lo) as usize;
    out[a] = poisson_density(anchor as f64, lambda);
    for i in a + 1..len {
        let j = lo + i as u64;
        out[i] = out[i - 1] * lambda / j as f64;
    }
    for i in (0..a).rev() {
        let j = lo + i as u64 + 1;
        out[i] = out[i + 1] * j as f64 / lambda;
    }
    out
}
