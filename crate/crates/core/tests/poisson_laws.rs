use num_complex::Complex64;
use proptest::prelude::*;

use bottleform::poly::{add, lie_transform, multiply, poisson_bracket, sub, MAX_DEGREE};
use bottleform::{CanonicalPolynomial, Direction, ExponentKey};

const TOL: f64 = 1e-11;
const TRUNC: u32 = 6;

fn poly_strategy(min_bk: u32, max_bk: u32) -> impl Strategy<Value = CanonicalPolynomial> {
    let term = (0u32..4, 0u32..4, 0u32..4, 0u32..4, -1.0f64..1.0, -1.0f64..1.0, min_bk..=max_bk);
    prop::collection::vec(term, 1..6).prop_map(|terms| {
        let mut p = CanonicalPolynomial::zero_with_cap(TRUNC, MAX_DEGREE);
        for (k1, l1, k2, l2, re, im, bk) in terms {
            p.add_term(ExponentKey::new(k1, l1, k2, l2), Complex64::new(re, im), bk);
        }
        p
    })
}

fn max_diff(a: &CanonicalPolynomial, b: &CanonicalPolynomial) -> f64 {
    sub(a, b).max_abs_coeff()
}

fn variable(slot: usize) -> CanonicalPolynomial {
    let mut e = [0u32; 4];
    e[slot] = 1;
    let mut p = CanonicalPolynomial::zero_with_cap(TRUNC, MAX_DEGREE);
    p.add_term(ExponentKey::new(e[0], e[1], e[2], e[3]), Complex64::new(1.0, 0.0), 0);
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric(f in poly_strategy(0, 2), g in poly_strategy(0, 2)) {
        let fg = poisson_bracket(&f, &g);
        let gf = poisson_bracket(&g, &f);
        prop_assert!(add(&fg, &gf).max_abs_coeff() < TOL);
    }

    #[test]
    fn bracket_is_bilinear(f in poly_strategy(0, 2), g in poly_strategy(0, 2), h in poly_strategy(0, 2), s in -2.0f64..2.0) {
        let lhs = poisson_bracket(&add(&f, &g.scale(Complex64::new(s, 0.0))), &h);
        let rhs = add(&poisson_bracket(&f, &h), &poisson_bracket(&g, &h).scale(Complex64::new(s, 0.0)));
        prop_assert!(max_diff(&lhs, &rhs) < TOL);
    }

    #[test]
    fn jacobi_identity(f in poly_strategy(0, 2), g in poly_strategy(0, 2), h in poly_strategy(0, 2)) {
        let a = poisson_bracket(&f, &poisson_bracket(&g, &h));
        let b = poisson_bracket(&g, &poisson_bracket(&h, &f));
        let c = poisson_bracket(&h, &poisson_bracket(&f, &g));
        prop_assert!(add(&add(&a, &b), &c).max_abs_coeff() < TOL);
    }

    #[test]
    fn leibniz_rule(f in poly_strategy(0, 2), g in poly_strategy(0, 2), h in poly_strategy(0, 2)) {
        let lhs = poisson_bracket(&f, &multiply(&g, &h));
        let rhs = add(
            &multiply(&poisson_bracket(&f, &g), &h),
            &multiply(&g, &poisson_bracket(&f, &h)),
        );
        prop_assert!(max_diff(&lhs, &rhs) < TOL);
    }

    #[test]
    fn product_is_commutative_and_associative(f in poly_strategy(0, 2), g in poly_strategy(0, 2), h in poly_strategy(0, 2)) {
        prop_assert!(max_diff(&multiply(&f, &g), &multiply(&g, &f)) < TOL);
        let left = multiply(&multiply(&f, &g), &h);
        let right = multiply(&f, &multiply(&g, &h));
        prop_assert!(max_diff(&left, &right) < TOL);
    }

    #[test]
    fn inverse_lie_transform_undoes_forward(f in poly_strategy(0, 3), chi in poly_strategy(1, 2)) {
        let there = lie_transform(&f, &chi, Direction::Forward).unwrap();
        let back = lie_transform(&there, &chi, Direction::Inverse).unwrap();
        let scale = there.max_abs_coeff().max(1.0);
        prop_assert!(max_diff(&back, &f) < TOL * scale, "diff {}", max_diff(&back, &f));
    }

    #[test]
    fn lie_transform_is_canonical(chi in poly_strategy(1, 2)) {
        let q1 = lie_transform(&variable(0), &chi, Direction::Forward).unwrap();
        let p1 = lie_transform(&variable(1), &chi, Direction::Forward).unwrap();
        let q2 = lie_transform(&variable(2), &chi, Direction::Forward).unwrap();
        let p2 = lie_transform(&variable(3), &chi, Direction::Forward).unwrap();
        let mut one = CanonicalPolynomial::zero_with_cap(TRUNC, MAX_DEGREE);
        one.add_term(ExponentKey::default(), Complex64::new(1.0, 0.0), 0);
        let zero = CanonicalPolynomial::zero_with_cap(TRUNC, MAX_DEGREE);
        let scale = [&q1, &p1, &q2, &p2].iter().map(|p| p.max_abs_coeff()).fold(1.0, f64::max);
        let tol = TOL * scale * scale;
        prop_assert!(max_diff(&poisson_bracket(&q1, &p1), &one) < tol);
        prop_assert!(max_diff(&poisson_bracket(&q2, &p2), &one) < tol);
        prop_assert!(max_diff(&poisson_bracket(&q1, &q2), &zero) < tol);
        prop_assert!(max_diff(&poisson_bracket(&q1, &p2), &zero) < tol);
        prop_assert!(max_diff(&poisson_bracket(&p1, &q2), &zero) < tol);
        prop_assert!(max_diff(&poisson_bracket(&p1, &p2), &zero) < tol);
    }

    #[test]
    fn lie_transform_preserves_brackets(f in poly_strategy(0, 2), g in poly_strategy(0, 2), chi in poly_strategy(1, 2)) {
        let tf = lie_transform(&f, &chi, Direction::Forward).unwrap();
        let tg = lie_transform(&g, &chi, Direction::Forward).unwrap();
        let lhs = poisson_bracket(&tf, &tg);
        let rhs = lie_transform(&poisson_bracket(&f, &g), &chi, Direction::Forward).unwrap();
        let scale = lhs.max_abs_coeff().max(1.0);
        prop_assert!(max_diff(&lhs, &rhs) < TOL * scale);
    }
}
