//! The operator `B*(g; x) = u Σ_j s_{u,j}(x) ∫_0^∞ s_{u,j}(t) g(t) dt`,
//! its kernel `Y(x,t) = u Σ_j s_{u,j}(x) s_{u,j}(t)` and the kernel CDF.
//!
//! The series is summed over a window of indices around the Poisson mode
//! `ux`. Indices whose weight is below `1e-40` of the modal weight are
//! skipped at the low end, and the neglected mass on both ends is bounded
//! explicitly and reported alongside the value.

use crate::basis::{check_ux, lower_cutoff, poisson_weights, truncation_index, TruncationSpec, LOWER_CUTOFF_REL};
use crate::error::{domain, Error, Result};
use crate::quadrature::{basis_integral, exact_terms_integral, exppoly_unchecked, QuadratureConfig};
use crate::special::{gamma_p, gamma_q};
use crate::target::{ExpPolyTerm, TargetFunction};

/// Maps the index `n` to the operator parameter `u_n`.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceRule {
    /// `u_n = n`
    Identity,
    /// `u_n = n^p`
    Power(f64),
    /// `u_n` listed explicitly, `n = 1, 2, ...`
    Explicit(Vec<f64>),
}

impl SequenceRule {
    pub fn validate(&self) -> Result<()> {
        match self {
            SequenceRule::Identity => Ok(()),
            SequenceRule::Power(p) if *p > 0.0 && p.is_finite() => Ok(()),
            SequenceRule::Power(p) => domain(format!("power rule needs a positive exponent, got {p}")),
            SequenceRule::Explicit(values) => {
                if values.is_empty() {
                    return domain("explicit sequence is empty");
                }
                if !(values[0] >= 1.0) {
                    return domain(format!("explicit sequence must start at a value ≥ 1, got {}", values[0]));
                }
                if values.windows(2).any(|w| !(w[1] > w[0])) || values.iter().any(|v| !v.is_finite()) {
                    return domain("explicit sequence must be finite and strictly increasing");
                }
                Ok(())
            }
        }
    }

    /// `u_n` for `n ≥ 1`.
    pub fn value(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return domain("sequence index starts at 1");
        }
        self.validate()?;
        let nf = n as f64;
        Ok(match self {
            SequenceRule::Identity => nf,
            SequenceRule::Power(p) if *p == 2.0 => nf * nf,
            SequenceRule::Power(p) if *p == 1.5 => nf * nf.sqrt(),
            SequenceRule::Power(p) => nf.powf(*p),
            SequenceRule::Explicit(values) => *values
                .get(n as usize - 1)
                .ok_or_else(|| Error::Domain(format!("explicit sequence has no entry {n}")))?,
        })
    }

    /// `n`, `n1.5`, `n2`, `n^p` / `n<p>`, or `explicit:u1,u2,...`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let rule = if s == "n" {
            SequenceRule::Identity
        } else if let Some(list) = s.strip_prefix("explicit:") {
            let values = list
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad sequence value `{v}`"))))
                .collect::<Result<Vec<_>>>()?;
            SequenceRule::Explicit(values)
        } else if let Some(p) = s.strip_prefix("n^").or_else(|| s.strip_prefix('n')) {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::Parse(format!("unknown sequence rule `{s}`")))?;
            if p == 1.0 {
                SequenceRule::Identity
            } else {
                SequenceRule::Power(p)
            }
        } else {
            return Err(Error::Parse(format!("unknown sequence rule `{s}`")));
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn label(&self) -> String {
        match self {
            SequenceRule::Identity => "n".into(),
            SequenceRule::Power(p) => format!("n^{p}"),
            SequenceRule::Explicit(v) => format!("explicit({} values)", v.len()),
        }
    }
}

/// Result of one operator evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorValue {
    pub value: f64,
    /// Number of series terms actually summed.
    pub series_terms_used: u64,
    /// Largest index included.
    pub last_index: u64,
    /// Poisson mass of the neglected indices (both ends).
    pub tail_mass: f64,
    /// Bound on `|neglected part of the series|`.
    pub tail_bound: f64,
    /// Accumulated error estimate of the inner integrals.
    pub inner_integral_error: f64,
}

/// `B*(g; x)` at parameter `u`.
pub fn apply(
    g: &TargetFunction,
    u: f64,
    x: f64,
    trunc: TruncationSpec,
    cfg: &QuadratureConfig,
) -> Result<OperatorValue> {
    check_ux(u, x)?;
    trunc.validate()?;
    cfg.validate()?;
    let rate = g.growth_rate();
    if u <= rate {
        return Err(Error::DivergentIntegral { u, rate });
    }
    evaluate_series(g, u, x, trunc, cfg)
}

/// `B*(g; x)` summed over `j = 0..=J` only.
pub fn apply_truncated(
    g: &TargetFunction,
    u: f64,
    x: f64,
    j_max: u64,
    cfg: &QuadratureConfig,
) -> Result<OperatorValue> {
    apply(g, u, x, TruncationSpec::FixedJ(j_max), cfg)
}

// Max over j ∈ [0, end) of Σ_i c_i I(u, j, m_i, a_i), bounded termwise.
// Each I(·, j) is log-concave in j, so its max over an index range sits at
// an endpoint or at the interior peak.
fn envelope_max_below(u: f64, terms: &[ExpPolyTerm], end: u64) -> f64 {
    if end == 0 {
        return 0.0;
    }
    let last = end - 1;
    terms
        .iter()
        .map(|e| {
            let mut cands = vec![0, last];
            let r = u / (u - e.rate);
            if r < 1.0 && e.power > 0 {
                let peak = r * e.power as f64 / (1.0 - r) - 1.0;
                if peak > 0.0 {
                    let p = peak.floor() as u64;
                    cands.push(p.min(last));
                    cands.push((p + 1).min(last));
                }
            }
            cands
                .into_iter()
                .map(|j| e.coeff * exppoly_unchecked(u, j, e.power, e.rate))
                .fold(0.0, f64::max)
        })
        .sum()
}

fn evaluate_series(
    g: &TargetFunction,
    u: f64,
    x: f64,
    trunc: TruncationSpec,
    cfg: &QuadratureConfig,
) -> Result<OperatorValue> {
    let lambda = u * x;
    let env_terms = g.envelope_terms();
    let exact_terms = g.exp_poly_terms();
    let envelope = |j: u64| -> f64 { exact_terms_integral(u, j, &env_terms) };

    let mode = lambda.floor() as u64;
    let mut lo = lower_cutoff(lambda, LOWER_CUTOFF_REL);
    let required = match trunc {
        TruncationSpec::FixedJ(jmax) => {
            if jmax < lo {
                lo = 0;
            }
            jmax
        }
        TruncationSpec::TailEpsilon(eps) => truncation_index(u, x, eps)?,
    };

    // Weights from lo up to the mode, then extended until the remaining
    // series is certainly negligible.
    let mut weights = poisson_weights(lambda, lo, mode.max(lo));
    let mut env: Vec<f64> = weights
        .iter()
        .enumerate()
        .map(|(i, w)| u * w * envelope(lo + i as u64))
        .collect();
    let env_max = env.iter().copied().fold(0.0, f64::max);
    let mut env_max = env_max;
    let mut j = lo + weights.len() as u64 - 1;
    // Ratios of successive terms above the mode only decrease, so once both
    // drop below ½ a geometric series bounds everything further out.
    let (mut w_ratio, mut e_ratio) = (1.0, 1.0);
    loop {
        let w_last = *weights.last().expect("nonempty window");
        let e_last = *env.last().expect("nonempty window");
        let past_mode = j as f64 > lambda;
        let negligible = (e_last <= 1e-30 * env_max || e_last == 0.0) && (w_last <= 1e-30 || w_last == 0.0);
        if j >= required && past_mode && w_ratio < 0.5 && e_ratio < 0.5 && negligible {
            break;
        }
        if let TruncationSpec::FixedJ(jmax) = trunc {
            if j >= jmax && past_mode && w_last == 0.0 && e_last == 0.0 {
                break;
            }
        }
        j += 1;
        let w = w_last * lambda / j as f64;
        let e = u * w * envelope(j);
        w_ratio = if w_last > 0.0 { w / w_last } else { 0.0 };
        e_ratio = if e_last > 0.0 { e / e_last } else { 0.0 };
        env_max = env_max.max(e);
        weights.push(w);
        env.push(e);
    }
    let far = j;
    let far_w_rem = weights.last().unwrap() * w_ratio / (1.0 - w_ratio);
    let far_e_rem = env.last().unwrap() * e_ratio / (1.0 - e_ratio);

    // Suffix sums of weights and envelope beyond each index.
    let len = weights.len();
    let mut w_suffix = vec![0.0; len];
    let mut e_suffix = vec![0.0; len];
    let (mut ws, mut es) = (far_w_rem, far_e_rem);
    for i in (0..len).rev() {
        w_suffix[i] = ws;
        e_suffix[i] = es;
        ws += weights[i];
        es += env[i];
    }

    let last = match trunc {
        TruncationSpec::FixedJ(jmax) => jmax.min(far),
        TruncationSpec::TailEpsilon(eps) => {
            let mut head = 0.0;
            let mut chosen = far;
            for i in 0..len {
                head += env[i];
                let idx = lo + i as u64;
                if idx >= required && e_suffix[i] <= eps * head && w_suffix[i] <= eps {
                    chosen = idx;
                    break;
                }
            }
            chosen
        }
    };
    let last_i = (last - lo) as usize;

    let mut value = 0.0;
    let mut inner_err = 0.0;
    for (i, &w) in weights[..=last_i].iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let jj = lo + i as u64;
        match &exact_terms {
            Some(terms) => {
                value += u * w * exact_terms_integral(u, jj, terms);
            }
            None => {
                let est = basis_integral(u, jj, g, cfg)?;
                value += u * w * est.value;
                inner_err += u * w * est.error;
            }
        }
    }
    if exact_terms.is_some() {
        let scale: f64 = env[..=last_i].iter().sum();
        inner_err = 8.0 * f64::EPSILON * scale;
    }

    // Mass below lo: ratios w_{j-1}/w_j = j/λ ≤ lo/λ.
    let (low_mass, low_bound) = if lo > 0 {
        let q = lo as f64 / lambda;
        let mass = weights[0] * q / (1.0 - q);
        (mass, u * mass * envelope_max_below(u, &env_terms, lo))
    } else {
        (0.0, 0.0)
    };

    Ok(OperatorValue {
        value,
        series_terms_used: last - lo + 1,
        last_index: last,
        tail_mass: w_suffix[last_i] + low_mass,
        tail_bound: e_suffix[last_i] + low_bound,
        inner_integral_error: inner_err,
    })
}

// Index window [lo, hi] for a kernel sum at Poisson rate `lambda`.
fn kernel_window(u: f64, x: f64, trunc: TruncationSpec) -> Result<(u64, u64)> {
    let lambda = u * x;
    Ok(match trunc {
        TruncationSpec::FixedJ(j) => (0, j),
        TruncationSpec::TailEpsilon(eps) => {
            (lower_cutoff(lambda, LOWER_CUTOFF_REL), truncation_index(u, x, eps)?)
        }
    })
}

/// `Y(x,t) = u Σ_j s_{u,j}(x) s_{u,j}(t)`; symmetric in `(x, t)`.
pub fn kernel_value(u: f64, x: f64, t: f64, trunc: TruncationSpec) -> Result<f64> {
    check_ux(u, x)?;
    check_ux(u, t)?;
    trunc.validate()?;
    let (lx, hx) = kernel_window(u, x, trunc)?;
    let (lt, ht) = kernel_window(u, t, trunc)?;
    let (lo, hi) = (lx.min(lt), hx.max(ht));
    let wx = poisson_weights(u * x, lo, hi);
    let wt = poisson_weights(u * t, lo, hi);
    Ok(u * wx.iter().zip(&wt).map(|(a, b)| a * b).sum::<f64>())
}

/// `∫_0^y Y(x,t) dt = Σ_j s_{u,j}(x) P(j+1, u y)`.
pub fn kernel_cdf(u: f64, x: f64, y: f64, trunc: TruncationSpec) -> Result<f64> {
    check_ux(u, x)?;
    if !(y >= 0.0) {
        return domain(format!("upper limit must be nonnegative, got {y}"));
    }
    trunc.validate()?;
    let (lo, hi) = kernel_window(u, x, trunc)?;
    let wx = poisson_weights(u * x, lo, hi);
    if y == 0.0 {
        return Ok(0.0);
    }
    if y.is_infinite() {
        return Ok(wx.iter().sum::<f64>().min(1.0));
    }
    let z = u * y;
    // P(j+1, z) = P(j+2, z) + pmf(j+1; z), summed downward from the top.
    let pmf = poisson_weights(z, lo + 1, hi + 1);
    let mut p = gamma_p(hi as f64 + 2.0, z);
    let mut acc = 0.0;
    for i in (0..wx.len()).rev() {
        p += pmf[i];
        acc += wx[i] * p.min(1.0);
    }
    Ok(acc.clamp(0.0, 1.0))
}

/// `∫_z^∞ Y(x,t) dt = Σ_j s_{u,j}(x) Q(j+1, u z)`, summed over the same
/// index window as [`kernel_cdf`].
pub fn kernel_sf(u: f64, x: f64, z: f64, trunc: TruncationSpec) -> Result<f64> {
    check_ux(u, x)?;
    if !(z >= 0.0) {
        return domain(format!("lower limit must be nonnegative, got {z}"));
    }
    trunc.validate()?;
    let (lo, hi) = kernel_window(u, x, trunc)?;
    let wx = poisson_weights(u * x, lo, hi);
    if z == 0.0 {
        return Ok(wx.iter().sum::<f64>().min(1.0));
    }
    if z.is_infinite() {
        return Ok(0.0);
    }
    let zz = u * z;
    // Q(j+1, zz) = Q(j, zz) + pmf(j; zz), summed upward from the bottom.
    let pmf = poisson_weights(zz, lo, hi);
    let mut q = if lo == 0 { 0.0 } else { gamma_q(lo as f64, zz) };
    let mut acc = 0.0;
    for i in 0..wx.len() {
        q += pmf[i];
        acc += wx[i] * q.min(1.0);
    }
    Ok(acc.clamp(0.0, 1.0))
}
