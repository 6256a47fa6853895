use proptest::prelude::*;

use smd_core::basis::{szasz_weight, truncation_index, BasisPoint, TruncationSpec};
use smd_core::bounds::{dbv_bound, modulus, second_modulus, total_variation, DbvSpec};
use smd_core::moments::{central_moment, central_moment_poly, raw_moment};
use smd_core::operator::{apply, kernel_cdf, kernel_value};
use smd_core::quadrature::{basis_integral, QuadratureConfig};
use smd_core::target::{ExpPolyTerm, GrowthBound, TargetFunction};

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn eps() -> TruncationSpec {
    TruncationSpec::default()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn exp_poly_target() -> impl Strategy<Value = TargetFunction> {
    prop::collection::vec((-3.0..3.0f64, 0u32..4, -3.0..1.5f64), 1..4)
        .prop_map(|terms| TargetFunction::ExpPolySum(terms.into_iter().map(|(c, m, a)| ExpPolyTerm::new(c, m, a)).collect()))
}

proptest! {
    #[test]
    fn weight_partial_sums_normalize(u in prop::sample::select(vec![1.0, 10.0, 100.0]),
                                     x in prop::sample::select(vec![0.0, 0.5, 1.0, 2.5]),
                                     e in -14.0..-2.0f64) {
        let eps = 10f64.powf(e);
        let j = truncation_index(u, x, eps).unwrap();
        let mut sum = 0.0;
        let mut prev = 0.0;
        for k in 0..=j {
            sum += szasz_weight(BasisPoint::new(u, k, x).unwrap()).unwrap();
            prop_assert!(sum >= prev);
            prev = sum;
        }
        prop_assert!(sum >= 1.0 - eps - 1e-13);
        prop_assert!(sum <= 1.0 + 1e-12);
        prop_assert!(j >= (u * x).ceil() as u64);
    }

    #[test]
    fn weight_matches_naive_form(u in 0.1..30.0f64, x in 0.0..1.0f64, j in 0u64..100) {
        let lambda = u * x;
        let naive = (-lambda).exp() * lambda.powi(j as i32) / (1..=j).map(|i| i as f64).product::<f64>();
        let got = szasz_weight(BasisPoint::new(u, j, x).unwrap()).unwrap();
        if naive > 1e-290 {
            prop_assert!(rel_close(got, naive, 1e-12), "{got} vs {naive}");
        }
    }

    #[test]
    fn weight_depends_on_product(u in 0.01..1e4f64, x in 0.0..10.0f64, j in 0u64..2000) {
        let a = szasz_weight(BasisPoint::new(u, j, x).unwrap()).unwrap();
        let b = szasz_weight(BasisPoint::new(1.0, j, u * x).unwrap()).unwrap();
        prop_assert!(rel_close(a, b, 1e-13) || a.max(b) < 1e-300);
    }

    #[test]
    fn basis_integral_linear(u in 3.5..200.0f64, j in 0u64..60, g in exp_poly_target(), h in exp_poly_target(),
                             alpha in -2.0..2.0f64, beta in -2.0..2.0f64) {
        let lhs = basis_integral(u, j, &g.linear_combination(alpha, &h, beta), &cfg()).unwrap().value;
        let rhs = alpha * basis_integral(u, j, &g, &cfg()).unwrap().value + beta * basis_integral(u, j, &h, &cfg()).unwrap().value;
        let scale = [&g, &h].iter().map(|f| {
            let env = TargetFunction::ExpPolySum(f.envelope_terms());
            basis_integral(u, j, &env, &cfg()).unwrap().value
        }).sum::<f64>() * (alpha.abs() + beta.abs());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-300), "{lhs} vs {rhs}");
    }

    #[test]
    fn basis_integral_positive(u in 0.5..100.0f64, j in 0u64..80, m in 0u32..5, a in -4.0..0.4f64, c in 0.0..5.0f64) {
        let g = TargetFunction::exp_poly(c, m, a);
        prop_assert!(basis_integral(u, j, &g, &cfg()).unwrap().value >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operator_linear(u in 3.5..500.0f64, x in 0.0..3.0f64, g in exp_poly_target(), h in exp_poly_target(),
                       alpha in -2.0..2.0f64, beta in -2.0..2.0f64) {
        let lhs = apply(&g.linear_combination(alpha, &h, beta), u, x, eps(), &cfg()).unwrap().value;
        let vg = apply(&g, u, x, eps(), &cfg()).unwrap().value;
        let vh = apply(&h, u, x, eps(), &cfg()).unwrap().value;
        let rhs = alpha * vg + beta * vh;
        let scale = (alpha * vg).abs() + (beta * vh).abs();
        prop_assert!((lhs - rhs).abs() <= 1e-11 * scale.max(1e-300), "{lhs} vs {rhs}");
    }

    #[test]
    fn operator_positive(u in 1.0..1000.0f64, x in 0.0..5.0f64, m in 0u32..4, a in -5.0..0.5f64, c in 0.0..3.0f64) {
        let g = TargetFunction::exp_poly(c, m, a);
        prop_assert!(apply(&g, u, x, eps(), &cfg()).unwrap().value >= -1e-12);
    }

    #[test]
    fn operator_positive_black_box(u in 1.0..400.0f64, x in 0.0..3.0f64, c in 0.0..3.0f64) {
        let g = TargetFunction::black_box("|t-c|", GrowthBound { scale: 1.0 + c, power: 1, rate: 0.0 }, move |t| (t - c).abs())
            .with_breakpoints(vec![c]);
        prop_assert!(apply(&g, u, x, eps(), &cfg()).unwrap().value >= -1e-12);
    }

    #[test]
    fn operator_bounded(u in 1.0..1000.0f64, x in 0.0..5.0f64, w in 0.1..10.0f64, c in 0.0..1.0f64) {
        // |c + sin(w t)| ≤ 1 + c
        let g = TargetFunction::black_box("c+sin", GrowthBound::bounded(1.0 + c), move |t| c + (w * t).sin());
        let v = apply(&g, u, x, eps(), &cfg()).unwrap().value;
        prop_assert!(v.abs() <= 1.0 + c + 1e-10);
        let e = TargetFunction::exp_poly(1.0, 0, -1.0);
        let v = apply(&e, u, x, eps(), &cfg()).unwrap().value;
        prop_assert!((0.0..=1.0 + 1e-10).contains(&v));
    }

    #[test]
    fn tail_bound_respects_epsilon(u in 3.0..1e4f64, x in 0.0..3.0f64, e in -14.0..-4.0f64) {
        let eps = 10f64.powf(e);
        let g = TargetFunction::monomial(0);
        let v = apply(&g, u, x, TruncationSpec::TailEpsilon(eps), &cfg()).unwrap();
        prop_assert!(v.series_terms_used >= 1);
        prop_assert!(v.tail_bound <= eps * (1.0 + 1e-12), "{} > {eps}", v.tail_bound);
        prop_assert!((v.value - 1.0).abs() <= eps + 1e-12);
    }

    #[test]
    fn kernel_symmetric(u in 0.5..500.0f64, x in 0.0..4.0f64, t in 0.0..4.0f64) {
        let a = kernel_value(u, x, t, eps()).unwrap();
        let b = kernel_value(u, t, x, eps()).unwrap();
        prop_assert!(rel_close(a, b, 1e-13) || a.max(b) < 1e-300);
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn kernel_cdf_monotone(u in 1.0..500.0f64, x in 0.0..3.0f64, mut ys in prop::collection::vec(0.0..6.0f64, 2..8)) {
        ys.sort_by(f64::total_cmp);
        let vals: Vec<f64> = ys.iter().map(|&y| kernel_cdf(u, x, y, eps()).unwrap()).collect();
        for w in vals.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-14);
        }
        prop_assert!(vals.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn central_poly_matches_binomial(u in 1.0..100.0f64, x in 0.0..3.0f64, m in 0usize..9) {
        let binom = |n: usize, k: usize| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
        let direct: f64 = (0..=m).map(|i| binom(m, i) * (-x).powi((m - i) as i32) * raw_moment(u, x, i).unwrap()).sum();
        let scale: f64 = (0..=m).map(|i| (binom(m, i) * x.powi((m - i) as i32) * raw_moment(u, x, i).unwrap()).abs()).sum();
        let poly = central_moment_poly(m).unwrap().eval(u, x);
        prop_assert!((poly - direct).abs() <= 1e-12 * scale.max(1.0), "{poly} vs {direct}");
        prop_assert_eq!(poly, central_moment(u, x, m).unwrap());
    }

    #[test]
    fn moduli_monotone_and_ordered(d1 in 0.01..0.5f64, f in 1.0..3.0f64, k in 0usize..4) {
        let g = |t: f64| match k {
            0 => (-t).exp(),
            1 => t * t,
            2 => (3.0 * t).sin(),
            _ => (t - 1.0).abs(),
        };
        let d2 = d1 * f;
        let step = d1 / 64.0;
        let dom = (0.0, 2.5 + 4.0 * d2);
        let w1 = modulus(g, d1, dom, step).unwrap().value;
        let w2 = modulus(g, d2, dom, step).unwrap().value;
        let s1 = second_modulus(g, d1, dom, step).unwrap().value;
        let s2 = second_modulus(g, d2, dom, step).unwrap().value;
        prop_assert!(w1 >= 0.0 && s1 >= 0.0);
        prop_assert!(w2 >= w1 && s2 >= s1);
        prop_assert!(s1 <= 2.0 * w1 + 1e-12 && s2 <= 2.0 * w2 + 1e-12);
    }

    #[test]
    fn total_variation_superadditive(a in -2.0..0.0f64, l1 in 0.1..2.0f64, l2 in 0.1..2.0f64, k in 0usize..3) {
        let f = |t: f64| match k {
            0 => (2.0 * t).sin(),
            1 => t.powi(3) - t,
            _ => (t - 0.3).abs() + (t > 0.7) as u8 as f64,
        };
        let bps = [0.3, 0.7];
        let (b, c) = (a + l1, a + l1 + l2);
        let whole = total_variation(f, (a, c), 2001, &bps).unwrap().value;
        let left = total_variation(f, (a, b), 2001, &bps).unwrap().value;
        let right = total_variation(f, (b, c), 2001, &bps).unwrap().value;
        prop_assert!(whole >= left + right - 1e-3 * whole.max(1.0), "{whole} < {left} + {right}");
        prop_assert!(whole >= (f(c) - f(a)).abs() - 1e-12);
    }

    #[test]
    fn dbv_terms_sum_and_nonnegative(u in 2.0..2000.0f64, x in 0.05..3.0f64, c in 0.0..2.5f64) {
        for spec in [DbvSpec::abs_kink(c), DbvSpec::affine(1.0, -2.0), DbvSpec::smooth(TargetFunction::exp_poly(1.0, 2, -1.0)).unwrap()] {
            let b = dbv_bound(&spec, u, x).unwrap();
            prop_assert_eq!(b.total, b.terms.iter().sum::<f64>());
            prop_assert!(b.terms.iter().all(|&t| t >= 0.0));
        }
    }
}
