//! Special functions used by the series and quadrature code.
//!
//! Poisson-type densities are evaluated with Loader's saddle-point form
//! (`stirlerr` + `bd0`), which keeps full relative precision when both the
//! index and the rate are in the millions. The naive exponent
//! `k ln(λ) − λ − lnΓ(k+1)` loses roughly `log10(k ln λ)` digits there.

use std::f64::consts::PI;

/// ln(sqrt(2π))
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of |Γ(x)|.
///
/// Lanczos for moderate arguments, Stirling's series with the Loader
/// correction above 15, and the reflection formula below 0.5.
pub fn ln_gamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.5 {
        // Γ(x)Γ(1−x) = π / sin(πx)
        let s = (PI * x).sin();
        if s == 0.0 {
            return f64::INFINITY;
        }
        return (PI / s.abs()).ln() - ln_gamma(1.0 - x);
    }
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x > 16.0 {
        // lnΓ(x) = lnΓ(n+1) with n = x-1
        let n = x - 1.0;
        return stirlerr(n) + (n + 0.5) * n.ln() - n + LN_SQRT_2PI;
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// ln(n!) for integer n.
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

// stirlerr(n) for n = 0, 0.5, 1, ..., 15
const SFERR_HALVES: [f64; 31] = [
    0.0,
    0.153_426_409_720_027_345_291_4,
    0.081_061_466_795_327_258_219_67,
    0.054_814_121_051_917_653_896_06,
    0.041_340_695_955_409_294_093_82,
    0.033_162_873_519_936_287_485_53,
    0.027_677_925_684_998_339_148_79,
    0.023_746_163_656_297_495_981_31,
    0.020_790_672_103_765_093_111_52,
    0.018_488_450_532_673_185_234_06,
    0.016_644_691_189_821_192_163_19,
    0.015_134_973_221_917_378_400_41,
    0.013_876_128_823_070_747_988_04,
    0.012_810_465_242_920_226_999_19,
    0.011_896_709_945_891_770_096_86,
    0.011_104_559_758_206_917_328_45,
    0.010_411_265_261_972_096_497_48,
    0.009_799_416_126_158_803_298_389,
    0.009_255_462_182_712_732_917_729,
    0.008_768_700_134_139_385_462_953,
    0.008_330_563_433_362_871_256_469,
    0.007_934_114_564_314_020_547_248,
    0.007_573_675_487_951_840_794_972,
    0.007_244_554_301_320_383_179_543,
    0.006_942_840_107_209_529_865_664,
    0.006_665_247_032_707_682_442_354,
    0.006_408_994_188_004_207_068_439,
    0.006_171_712_263_039_457_647_532,
    0.005_951_370_112_758_847_735_624,
    0.005_746_216_513_010_115_682_023,
    0.005_554_733_551_962_801_371_038,
];

/// Error of Stirling's approximation:
/// `ln(n!) − [ (n+½) ln n − n + ln sqrt(2π) ]`.
pub fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;

    if n <= 15.0 {
        let nn = n + n;
        if nn == nn.floor() {
            return SFERR_HALVES[nn as usize];
        }
        return lanczos_ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        return (S0 - S1 / nn) / n;
    }
    if n > 80.0 {
        return (S0 - (S1 - S2 / nn) / nn) / n;
    }
    if n > 35.0 {
        return (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n;
    }
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
}

fn lanczos_ln_gamma(x: f64) -> f64 {
    let z = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Deviance term `x ln(x/m) + m − x`, accurate when `x ≈ m`.
pub fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        return s;
    }
    x * (x / m).ln() + m - x
}

/// `e^{-λ} λ^k / Γ(k+1)` for real `k ≥ 0`, `λ ≥ 0`.
///
/// For integer `k` this is the Poisson probability mass at `k`; the same
/// expression is the Gamma(k+1, 1) density at `λ`.
pub fn poisson_density(k: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0.0 { 1.0 } else { 0.0 };
    }
    if k == 0.0 {
        return (-lambda).exp();
    }
    if !lambda.is_finite() {
        return 0.0;
    }
    if lambda < k * f64::MIN_POSITIVE {
        return (-lambda + k * lambda.ln() - ln_gamma(k + 1.0)).exp();
    }
    (-stirlerr(k) - bd0(k, lambda)).exp() / (2.0 * PI * k).sqrt()
}

/// Natural log of [`poisson_density`]; finite where the density underflows.
pub fn ln_poisson_density(k: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if k == 0.0 {
        return -lambda;
    }
    -stirlerr(k) - bd0(k, lambda) - 0.5 * (2.0 * PI * k).ln()
}

const GAMMA_EPS: f64 = 1e-16;
const GAMMA_MAX_ITER: usize = 100_000;

/// Regularized lower incomplete gamma `P(a, z)`.
pub fn gamma_p(a: f64, z: f64) -> f64 {
    debug_assert!(a > 0.0 && z >= 0.0);
    if z == 0.0 {
        return 0.0;
    }
    if z.is_infinite() {
        return 1.0;
    }
    if z < a + 1.0 {
        gamma_p_series(a, z)
    } else {
        1.0 - gamma_q_fraction(a, z)
    }
}

/// Regularized upper incomplete gamma `Q(a, z) = 1 − P(a, z)`.
pub fn gamma_q(a: f64, z: f64) -> f64 {
    debug_assert!(a > 0.0 && z >= 0.0);
    if z == 0.0 {
        return 1.0;
    }
    if z.is_infinite() {
        return 0.0;
    }
    if z < a + 1.0 {
        1.0 - gamma_p_series(a, z)
    } else {
        gamma_q_fraction(a, z)
    }
}

// P(a,z) = z^a e^-z / Γ(a+1) · Σ_n z^n / ((a+1)…(a+n))
fn gamma_p_series(a: f64, z: f64) -> f64 {
    let prefactor = poisson_density(a, z);
    if prefactor == 0.0 {
        return 0.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut ap = a;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= z / ap;
        sum += term;
        if term < sum * GAMMA_EPS {
            break;
        }
    }
    (prefactor * sum).min(1.0)
}

// Modified Lentz evaluation of the continued fraction for Q(a,z).
fn gamma_q_fraction(a: f64, z: f64) -> f64 {
    // z^a e^-z / Γ(a) = a · poisson_density(a, z)
    let prefactor = a * poisson_density(a, z);
    if prefactor == 0.0 {
        return 0.0;
    }
    let tiny = 1e-300;
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    (prefactor * h).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ln_gamma_small_integers() {
        let mut fact = 1.0f64;
        for n in 1..=30u32 {
            fact *= n as f64;
            assert_relative_eq!(ln_gamma(n as f64 + 1.0), fact.ln(), max_relative = 1e-14);
        }
    }

    #[test]
    fn ln_gamma_half() {
        assert_relative_eq!(ln_gamma(0.5), PI.sqrt().ln(), max_relative = 1e-14);
        assert_relative_eq!(ln_gamma(1.5), (PI.sqrt() / 2.0).ln(), max_relative = 1e-14);
        // Γ(-0.5) = -2 sqrt(π)
        assert_relative_eq!(ln_gamma(-0.5), (2.0 * PI.sqrt()).ln(), max_relative = 1e-14);
    }

    #[test]
    fn ln_gamma_continuous_across_switch() {
        let below = lanczos_ln_gamma(16.0);
        let above = ln_gamma(16.0 + 1e-12);
        assert_relative_eq!(below, above, max_relative = 1e-13);
        assert_relative_eq!(ln_gamma(16.0), lanczos_ln_gamma(16.0), max_relative = 1e-14);
        assert_relative_eq!(ln_gamma(20.5), lanczos_ln_gamma(20.5), max_relative = 1e-14);
    }

    #[test]
    fn stirlerr_matches_definition() {
        for &n in &[15.5, 16.0, 40.0, 100.0, 600.0] {
            let direct = lanczos_ln_gamma(n + 1.0) - (n + 0.5) * f64::ln(n) + n - LN_SQRT_2PI;
            assert_relative_eq!(stirlerr(n), direct, max_relative = 1e-9);
        }
    }

    #[test]
    fn poisson_density_small_cases() {
        assert_eq!(poisson_density(0.0, 0.0), 1.0);
        assert_eq!(poisson_density(3.0, 0.0), 0.0);
        assert_relative_eq!(poisson_density(0.0, 10.0), (-10.0f64).exp(), max_relative = 1e-15);
        // 3^2 e^-3 / 2
        assert_relative_eq!(poisson_density(2.0, 3.0), 4.5 * (-3.0f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn gamma_p_and_q_complement() {
        for &(a, z) in &[(1.0, 0.5), (3.0, 2.0), (10.0, 15.0), (50.5, 40.0), (1000.0, 1010.0)] {
            assert_relative_eq!(gamma_p(a, z) + gamma_q(a, z), 1.0, max_relative = 1e-13);
        }
        // P(1, z) = 1 - e^-z
        assert_relative_eq!(gamma_p(1.0, 0.3), 1.0 - (-0.3f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(gamma_q(1.0, 7.0), (-7.0f64).exp(), max_relative = 1e-13);
    }

    #[test]
    fn gamma_q_integer_is_poisson_cdf() {
        // Q(k+1, λ) = Σ_{i≤k} pmf(i; λ)
        let lambda = 12.5;
        let mut cdf = 0.0;
        for k in 0..40u32 {
            cdf += poisson_density(k as f64, lambda);
            assert_relative_eq!(gamma_q(k as f64 + 1.0, lambda), cdf, max_relative = 1e-12);
        }
    }
}
