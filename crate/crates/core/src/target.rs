//! Target functions `g` the operator is applied to.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// `coeff · t^power`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomialTerm {
    pub coeff: f64,
    pub power: u32,
}

/// `coeff · t^power · e^{rate·t}`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpPolyTerm {
    pub coeff: f64,
    pub power: u32,
    pub rate: f64,
}

impl ExpPolyTerm {
    pub fn new(coeff: f64, power: u32, rate: f64) -> Self {
        Self { coeff, power, rate }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeff * t.powi(self.power as i32) * (self.rate * t).exp()
    }
}

/// Declared envelope `|g(t)| ≤ scale · (1 + t^power) · e^{rate·t}` for a
/// black-box target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthBound {
    pub scale: f64,
    pub power: u32,
    pub rate: f64,
}

impl GrowthBound {
    pub fn bounded(sup: f64) -> Self {
        Self { scale: sup, power: 0, rate: 0.0 }
    }

    fn envelope_terms(&self) -> Vec<ExpPolyTerm> {
        if self.power == 0 {
            vec![ExpPolyTerm::new(2.0 * self.scale, 0, self.rate)]
        } else {
            vec![
                ExpPolyTerm::new(self.scale, 0, self.rate),
                ExpPolyTerm::new(self.scale, self.power, self.rate),
            ]
        }
    }
}

pub type EvalFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A target with no closed form, evaluated pointwise.
#[derive(Clone)]
pub struct BlackBox {
    pub label: String,
    pub eval: EvalFn,
    pub growth: GrowthBound,
    /// Points where `g` or `g'` is not smooth; quadrature splits there.
    pub breakpoints: Vec<f64>,
}

impl fmt::Debug for BlackBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlackBox")
            .field("label", &self.label)
            .field("growth", &self.growth)
            .field("breakpoints", &self.breakpoints)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum TargetFunction {
    MonomialSum(Vec<MonomialTerm>),
    ExpPolySum(Vec<ExpPolyTerm>),
    BlackBox(BlackBox),
}

impl TargetFunction {
    pub fn constant(c: f64) -> Self {
        Self::MonomialSum(vec![MonomialTerm { coeff: c, power: 0 }])
    }

    pub fn monomial(power: u32) -> Self {
        Self::MonomialSum(vec![MonomialTerm { coeff: 1.0, power }])
    }

    pub fn exp_poly(coeff: f64, power: u32, rate: f64) -> Self {
        Self::ExpPolySum(vec![ExpPolyTerm::new(coeff, power, rate)])
    }

    pub fn black_box<F>(label: impl Into<String>, growth: GrowthBound, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::BlackBox(BlackBox {
            label: label.into(),
            eval: Arc::new(f),
            growth,
            breakpoints: Vec::new(),
        })
    }

    pub fn with_breakpoints(mut self, points: Vec<f64>) -> Self {
        if let Self::BlackBox(ref mut b) = self {
            b.breakpoints = points;
        }
        self
    }

    /// Built-in targets, by their CLI names.
    pub fn builtin(name: &str) -> Option<Self> {
        let g = match name {
            "x2e2x" => Self::exp_poly(1.0, 2, 2.0),
            "negx3e5x" => Self::exp_poly(-1.0, 3, -5.0),
            "one" => Self::constant(1.0),
            "t" => Self::monomial(1),
            "t2" => Self::monomial(2),
            "expneg" => Self::exp_poly(1.0, 0, -1.0),
            "abs1" => Self::black_box("|t-1|", GrowthBound { scale: 1.0, power: 1, rate: 0.0 }, |t| {
                (t - 1.0).abs()
            })
            .with_breakpoints(vec![1.0]),
            _ => return None,
        };
        Some(g)
    }

    pub const BUILTIN_NAMES: &'static [&'static str] =
        &["x2e2x", "negx3e5x", "one", "t", "t2", "expneg", "abs1"];

    /// Parses a built-in name or an exponential-polynomial literal
    /// `coeff:power:rate[;coeff:power:rate...]`.
    pub fn parse(spec: &str) -> Result<Self> {
        if let Some(g) = Self::builtin(spec.trim()) {
            return Ok(g);
        }
        let mut terms = Vec::new();
        for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let fields: Vec<&str> = part.split(':').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!(
                    "expected coeff:power:rate, got `{part}` (built-ins: {})",
                    Self::BUILTIN_NAMES.join(", ")
                )));
            }
            let coeff: f64 = fields[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad coefficient `{}`", fields[0])))?;
            let power: u32 = fields[1]
                .parse()
                .map_err(|_| Error::Parse(format!("bad power `{}`", fields[1])))?;
            let rate: f64 = fields[2]
                .parse()
                .map_err(|_| Error::Parse(format!("bad rate `{}`", fields[2])))?;
            if !coeff.is_finite() || !rate.is_finite() {
                return Err(Error::Parse(format!("non-finite term `{part}`")));
            }
            terms.push(ExpPolyTerm::new(coeff, power, rate));
        }
        if terms.is_empty() {
            return Err(Error::Parse(format!("empty target `{spec}`")));
        }
        Ok(Self::ExpPolySum(terms))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::MonomialSum(terms) => terms.iter().map(|m| m.coeff * t.powi(m.power as i32)).sum(),
            Self::ExpPolySum(terms) => terms.iter().map(|e| e.eval(t)).sum(),
            Self::BlackBox(b) => (b.eval)(t),
        }
    }

    /// Exponential growth rate `a`; the operator needs `u > a`.
    pub fn growth_rate(&self) -> f64 {
        match self {
            Self::MonomialSum(_) => 0.0,
            Self::ExpPolySum(terms) => terms
                .iter()
                .filter(|e| e.coeff != 0.0)
                .map(|e| e.rate)
                .fold(f64::NEG_INFINITY, f64::max),
            Self::BlackBox(b) => b.growth.rate,
        }
    }

    /// The target as a sum of `c t^m e^{at}` terms, when it has that form.
    pub fn exp_poly_terms(&self) -> Option<Vec<ExpPolyTerm>> {
        match self {
            Self::MonomialSum(terms) => Some(
                terms
                    .iter()
                    .map(|m| ExpPolyTerm::new(m.coeff, m.power, 0.0))
                    .collect(),
            ),
            Self::ExpPolySum(terms) => Some(terms.clone()),
            Self::BlackBox(_) => None,
        }
    }

    /// Nonnegative exp-poly terms dominating `|g|`.
    pub fn envelope_terms(&self) -> Vec<ExpPolyTerm> {
        match self.exp_poly_terms() {
            Some(terms) => terms
                .into_iter()
                .filter(|e| e.coeff != 0.0)
                .map(|e| ExpPolyTerm::new(e.coeff.abs(), e.power, e.rate))
                .collect(),
            None => match self {
                Self::BlackBox(b) => b.growth.envelope_terms(),
                _ => unreachable!(),
            },
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        match self {
            Self::BlackBox(b) => &b.breakpoints,
            _ => &[],
        }
    }

    pub fn is_black_box(&self) -> bool {
        matches!(self, Self::BlackBox(_))
    }

    /// `α·self + β·other`, kept in closed form when both sides allow it.
    pub fn linear_combination(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        match (self.exp_poly_terms(), other.exp_poly_terms()) {
            (Some(a), Some(b)) => {
                let mut terms: Vec<ExpPolyTerm> = a
                    .into_iter()
                    .map(|e| ExpPolyTerm::new(alpha * e.coeff, e.power, e.rate))
                    .collect();
                terms.extend(b.into_iter().map(|e| ExpPolyTerm::new(beta * e.coeff, e.power, e.rate)));
                if terms.iter().all(|e| e.rate == 0.0) {
                    Self::MonomialSum(
                        terms
                            .into_iter()
                            .map(|e| MonomialTerm { coeff: e.coeff, power: e.power })
                            .collect(),
                    )
                } else {
                    Self::ExpPolySum(terms)
                }
            }
            _ => {
                let (f, g) = (self.clone(), other.clone());
                let env = |t: &Self| -> GrowthBound {
                    let terms = t.envelope_terms();
                    GrowthBound {
                        scale: terms.iter().map(|e| e.coeff).sum::<f64>().max(0.0),
                        power: terms.iter().map(|e| e.power).max().unwrap_or(0),
                        rate: terms.iter().map(|e| e.rate).fold(0.0, f64::max),
                    }
                };
                let (ef, eg) = (env(self), env(other));
                let growth = GrowthBound {
                    scale: alpha.abs() * ef.scale + beta.abs() * eg.scale,
                    power: ef.power.max(eg.power),
                    rate: ef.rate.max(eg.rate),
                };
                let mut bps = self.breakpoints().to_vec();
                bps.extend_from_slice(other.breakpoints());
                Self::black_box(
                    format!("{alpha}*({}) + {beta}*({})", self.label(), other.label()),
                    growth,
                    move |t| alpha * f.eval(t) + beta * g.eval(t),
                )
                .with_breakpoints(bps)
            }
        }
    }

    pub fn label(&self) -> String {
        fn fmt_term(c: f64, m: u32, a: f64) -> String {
            let mut s = format!("{c}");
            if m > 0 {
                s.push_str(&format!("*t^{m}"));
            }
            if a != 0.0 {
                s.push_str(&format!("*e^({a}t)"));
            }
            s
        }
        match self {
            Self::MonomialSum(terms) => terms
                .iter()
                .map(|m| fmt_term(m.coeff, m.power, 0.0))
                .collect::<Vec<_>>()
                .join(" + "),
            Self::ExpPolySum(terms) => terms
                .iter()
                .map(|e| fmt_term(e.coeff, e.power, e.rate))
                .collect::<Vec<_>>()
                .join(" + "),
            Self::BlackBox(b) => b.label.clone(),
        }
    }
}
