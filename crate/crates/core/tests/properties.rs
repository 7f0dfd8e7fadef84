use jpk_core::basis::{basis_moment_integral, basis_partial_sum, jain_basis, JainParams};
use jpk_core::numerics::{
    hyp1f1_terminating, integrate_halfline_from, ln_gamma, pochhammer, tricomi_u_oracle, SeriesQuadConfig,
};
use jpk_core::operators::{apply_phillips, TestFunction};
use jpk_core::symbolic::{rat, ExactPoly, Monomial};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

fn poly_strategy() -> impl Strategy<Value = ExactPoly> {
    let term = (0u32..4, 0u32..4, -2i32..3, -6i64..7, 1i64..4);
    (prop::collection::vec(term, 0..5), 0u32..3).prop_map(|(terms, d)| {
        ExactPoly::from_terms(
            terms.into_iter().map(|(m, b, e, num, den)| (Monomial::new(m, b, e), rat(num, den))),
            d,
        )
    })
}

fn point() -> impl Strategy<Value = (f64, f64, f64)> {
    (-2.0f64..2.0, 0.0f64..0.9, 0.5f64..10.0)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_laws(a in poly_strategy(), b in poly_strategy(), c in poly_strategy()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
        prop_assert_eq!(&a * &ExactPoly::one(), a.clone());
    }

    #[test]
    fn canonical_form_is_idempotent(a in poly_strategy()) {
        let rebuilt = ExactPoly::from_terms(a.terms().map(|(m, c)| (*m, c.clone())), a.denom_pow());
        prop_assert_eq!(rebuilt, a);
    }

    #[test]
    fn evaluation_is_a_ring_map(a in poly_strategy(), b in poly_strategy(), (x, beta, n) in point()) {
        let ab = (&a * &b).eval(x, beta, n).unwrap();
        let prod = a.eval(x, beta, n).unwrap() * b.eval(x, beta, n).unwrap();
        prop_assert!(close(ab, prod, 1e-9), "{} vs {}", ab, prod);
        let s = (&a + &b).eval(x, beta, n).unwrap();
        let sum = a.eval(x, beta, n).unwrap() + b.eval(x, beta, n).unwrap();
        prop_assert!(close(s, sum, 1e-9));
    }

    #[test]
    fn derivative_obeys_product_rule(a in poly_strategy(), b in poly_strategy()) {
        let lhs = (&a * &b).d_main();
        let rhs = &(&a.d_main() * &b) + &(&a * &b.d_main());
        prop_assert_eq!(lhs, rhs);
        let lhs = (&a * &b).d_beta();
        let rhs = &(&a.d_beta() * &b) + &(&a * &b.d_beta());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn pochhammer_recurrence(a in -5.0f64..20.0, m in 0u32..12) {
        let next = pochhammer(a, m + 1);
        let step = pochhammer(a, m) * (a + f64::from(m));
        prop_assert!(close(next, step, 1e-12));
    }

    #[test]
    fn terminating_hypergeometric_matches_rational_sum(
        m in 0i64..12,
        b_num in 1i64..40,
        b_den in 1i64..4,
        z_num in -30i64..30,
        z_den in 1i64..5,
    ) {
        // b > 0, so no lower Pochhammer factor vanishes.
        let (a, b, z) = (rat(-m, 1), rat(b_num, b_den), rat(z_num, z_den));
        let mut term = BigRational::one();
        let mut sum = BigRational::one();
        for j in 0..m {
            let jr = rat(j, 1);
            term = term * (&a + &jr) * &z / ((&b + &jr) * (&jr + BigRational::one()));
            sum += &term;
        }
        let exact = sum.to_f64().unwrap();
        let got = hyp1f1_terminating(-m as f64, b.to_f64().unwrap(), z.to_f64().unwrap()).unwrap();
        let scale: f64 = {
            // Sum of absolute terms bounds the attainable accuracy.
            let mut t = BigRational::one();
            let mut s = BigRational::one();
            for j in 0..m {
                let jr = rat(j, 1);
                t = t * (&a + &jr) * &z / ((&b + &jr) * (&jr + BigRational::one()));
                s += if t < BigRational::zero() { -t.clone() } else { t.clone() };
            }
            s.to_f64().unwrap()
        };
        prop_assert!((got - exact).abs() <= 1e-13 * scale, "{} vs {}", got, exact);
    }

    #[test]
    fn basis_is_nonnegative(n in 0.1f64..50.0, beta in 0.0f64..0.99, k in 0usize..400, x in 0.0f64..20.0) {
        let p = JainParams::new(n, beta).unwrap();
        let l = jain_basis(p, k, x);
        prop_assert!(l >= 0.0 && l.is_finite());
    }

    #[test]
    fn basis_sums_to_one(n in 0.5f64..40.0, beta in 0.0f64..0.9, x in 0.0f64..6.0) {
        let cfg = SeriesQuadConfig::default();
        let p = JainParams::new(n, beta).unwrap();
        let (s, _) = basis_partial_sum(p, x, &cfg).unwrap();
        prop_assert!((s - 1.0).abs() <= 10.0 * cfg.tail_tol, "{}", s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hypergeometric_and_tricomi_forms_agree(n in 0.5f64..8.0, beta in 0.05f64..0.95, k in 2usize..30, r in 0u32..6) {
        let cfg = SeriesQuadConfig::default();
        let p = JainParams::new(n, beta).unwrap();
        let z = (k as f64 - 1.0) * beta;
        let rf = f64::from(r);
        let u = tricomi_u_oracle(rf + 2.0, k as f64 + rf + 1.0, z, &cfg).unwrap();
        let via_u = (ln_gamma(rf + 2.0) + (k as f64 + rf) * z.ln() - ln_gamma(k as f64) - (rf + 1.0) * n.ln() - z
            + u.ln())
        .exp();
        let via_hyp = basis_moment_integral(p, k, r);
        prop_assert!((via_u - via_hyp).abs() <= 10.0 * cfg.quad_rel_tol * via_hyp, "{} vs {}", via_u, via_hyp);
    }

    #[test]
    fn inner_products_match_quadrature(n in 0.5f64..8.0, beta in 0.0f64..0.95, k in 1usize..31, r in 0u32..6) {
        let cfg = SeriesQuadConfig::default();
        let p = JainParams::new(n, beta).unwrap();
        let f = |t: f64| jain_basis(p, k - 1, t) * t.powi(r as i32);
        let m = (k as f64 + 1.0 + f64::from(r)) / n;
        let q = integrate_halfline_from(&f, &[0.5 * m, m, 2.0 * m, 5.0 * m], &cfg).unwrap().value;
        let exact = basis_moment_integral(p, k, r);
        prop_assert!((q - exact).abs() <= 1e-8 * exact, "{} vs {}", q, exact);
    }

    #[test]
    fn phillips_is_positive_and_linear(n in 1.0f64..30.0, beta in 0.0f64..0.8, x in 0.0f64..4.0, a in -3.0f64..3.0) {
        let cfg = SeriesQuadConfig::default();
        let p = JainParams::new(n, beta).unwrap();
        let f = TestFunction::builtin("exp-neg").unwrap();
        let g = TestFunction::builtin("abs-sin").unwrap();
        let pf = apply_phillips(p, &f, x, &cfg).unwrap();
        let pg = apply_phillips(p, &g, x, &cfg).unwrap();
        prop_assert!(pf > 0.0 && pg >= 0.0);
        let h = TestFunction::affine_combination(a, &f, &g);
        let ph = apply_phillips(p, &h, x, &cfg).unwrap();
        prop_assert!((ph - (a * pf + pg)).abs() <= 1e-9, "{} vs {}", ph, a * pf + pg);
    }
}
