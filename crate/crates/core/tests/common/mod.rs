//! Oracles shared by the integration tests. None of them call into the
//! library.

#![allow(dead_code)]

use statrs::distribution::{Discrete, Poisson};
use statrs::function::gamma::ln_gamma;

/// `B*(c t^m e^{at}; x)` in closed form for `m ∈ {0,1,2,3}`: with
/// `r = u/(u−a)` and `μ = u x r`, the series collapses to
/// `c u/(u−a)^{m+1} e^{u x a/(u−a)} E[(J+1)…(J+m)]`, `J ~ Poisson(μ)`.
pub fn closed_form(c: f64, m: u32, a: f64, u: f64, x: f64) -> f64 {
    let mu = u * x * u / (u - a);
    let rising = match m {
        0 => 1.0,
        1 => mu + 1.0,
        2 => mu * mu + 4.0 * mu + 2.0,
        3 => mu * mu * mu + 9.0 * mu * mu + 18.0 * mu + 6.0,
        _ => unreachable!(),
    };
    c * u / (u - a).powi(m as i32 + 1) * (u * x * a / (u - a)).exp() * rising
}

/// Composite Simpson on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `Ω_0..=Ω_max_m` at `(u, x)` by summing the series with statrs weights and
/// integrating each term with Simpson's rule.
pub fn central_moments_brute_force(u: f64, x: f64, max_m: usize) -> Vec<f64> {
    let mut omega = vec![0.0f64; max_m + 1];
    if x == 0.0 {
        let dens = |s: f64| (-s).exp();
        for (m, o) in omega.iter_mut().enumerate() {
            *o = simpson(|s| dens(s) * (s / u).powi(m as i32), 0.0, 80.0, 40_000);
        }
        return omega;
    }
    let weights = Poisson::new(u * x).unwrap();
    let jmax = (u * x + 40.0 * (u * x).sqrt() + 40.0) as u64;
    for j in 0..=jmax {
        let w = weights.pmf(j);
        if w < 1e-300 {
            continue;
        }
        // ∫ s_{u,j}(t) (t−x)^m dt with s = u t and density e^{-s} s^j / j!
        let jf = j as f64;
        let lg = ln_gamma(jf + 1.0);
        let lo = (jf - 40.0 * (jf + 1.0).sqrt() - 10.0).max(0.0);
        let hi = jf + 40.0 * (jf + 1.0).sqrt() + 60.0;
        let dens = |s: f64| if s == 0.0 { (j == 0) as u8 as f64 } else { (-s + jf * s.ln() - lg).exp() };
        for (m, o) in omega.iter_mut().enumerate() {
            *o += w * simpson(|s| dens(s) * (s / u - x).powi(m as i32), lo, hi, 40_000);
        }
    }
    omega
}
