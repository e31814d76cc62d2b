//! Exact recomputation of the first normalization steps of the builtin
//! model over the Gaussian rationals, written without the library's
//! polynomial or normal-form code.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, Complex, One, ToPrimitive, Zero};

use bottleform::model::complexify_nonresonant;
use bottleform::normform::{extract_omega2_squared, normalize};

type Q = BigRational;
type C = Complex<Q>;
/// Exponents of `(q1, p1, q2, p2)`.
type Poly = BTreeMap<[u32; 4], C>;

/// Highest total degree kept (three normalization steps).
const MAX_DEG: u32 = 8;

fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

fn c(re: Q, im: Q) -> C {
    Complex::new(re, im)
}

fn real(x: Q) -> C {
    c(x, Q::zero())
}

fn deg(e: &[u32; 4]) -> u32 {
    e.iter().sum()
}

fn add_into(acc: &mut Poly, e: [u32; 4], v: C) {
    if deg(&e) > MAX_DEG || v.is_zero() {
        return;
    }
    let slot = acc.entry(e).or_insert_with(C::zero);
    *slot = slot.clone() + v;
    if slot.is_zero() {
        acc.remove(&e);
    }
}

fn add(a: &Poly, b: &Poly) -> Poly {
    let mut out = a.clone();
    for (e, v) in b {
        add_into(&mut out, *e, v.clone());
    }
    out
}

fn scale(a: &Poly, s: &C) -> Poly {
    let mut out = Poly::new();
    for (e, v) in a {
        add_into(&mut out, *e, v.clone() * s.clone());
    }
    out
}

fn mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ea, va) in a {
        for (eb, vb) in b {
            let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2], ea[3] + eb[3]];
            add_into(&mut out, e, va.clone() * vb.clone());
        }
    }
    out
}

fn diff(a: &Poly, var: usize) -> Poly {
    let mut out = Poly::new();
    for (e, v) in a {
        if e[var] > 0 {
            let mut f = *e;
            f[var] -= 1;
            add_into(&mut out, f, v.clone() * real(q(e[var] as i64, 1)));
        }
    }
    out
}

/// `{f, g} = sum_i f_qi g_pi - f_pi g_qi`.
fn bracket(f: &Poly, g: &Poly) -> Poly {
    let mut out = Poly::new();
    for (qv, pv) in [(0, 1), (2, 3)] {
        out = add(&out, &mul(&diff(f, qv), &diff(g, pv)));
        out = add(&out, &scale(&mul(&diff(f, pv), &diff(g, qv)), &real(q(-1, 1))));
    }
    out
}

fn pow(a: &Poly, n: u32) -> Poly {
    let mut out = Poly::from([([0, 0, 0, 0], real(Q::one()))]);
    for _ in 0..n {
        out = mul(&out, a);
    }
    out
}

fn degree_part(a: &Poly, d: u32) -> Poly {
    a.iter().filter(|(e, _)| deg(e) == d).map(|(e, v)| (*e, v.clone())).collect()
}

/// `exp(L_chi) f = sum_k L_chi^k f / k!` with `L_chi f = {f, chi}`.
fn lie(f: &Poly, chi: &Poly) -> Poly {
    let mut out = f.clone();
    let mut term = f.clone();
    let mut k = 1i64;
    while !term.is_empty() {
        term = scale(&bracket(&term, chi), &real(q(1, k)));
        out = add(&out, &term);
        k += 1;
    }
    out
}

/// Builtin Hamiltonian with `rho = (q1 + i p1)/sqrt(2)`, `z = q2`, `p_z = p2`:
/// `i q1 p1 + p2^2/2 + (V - rho^2/2)`, where only even powers of `rho` occur.
fn builtin_hamiltonian() -> Poly {
    // rho^2 = (q1 + i p1)^2 / 2
    let mut rho2 = Poly::new();
    add_into(&mut rho2, [2, 0, 0, 0], real(q(1, 2)));
    add_into(&mut rho2, [1, 1, 0, 0], c(Q::zero(), Q::one()));
    add_into(&mut rho2, [0, 2, 0, 0], real(q(-1, 2)));
    let z = Poly::from([([0, 0, 1, 0], real(Q::one()))]);
    // (rho power / 2, z power, coefficient) of V without rho^2/2
    let terms = [(1, 2, q(1, 2)), (2, 0, q(-1, 8)), (1, 4, q(1, 8)), (2, 2, q(-1, 16)), (3, 0, q(1, 128))];
    let mut h = Poly::new();
    add_into(&mut h, [1, 1, 0, 0], c(Q::zero(), Q::one()));
    add_into(&mut h, [0, 0, 0, 2], real(q(1, 2)));
    for (k, m, coeff) in terms {
        h = add(&h, &scale(&mul(&pow(&rho2, k), &pow(&z, m)), &real(coeff)));
    }
    h
}

fn in_kernel(e: &[u32; 4]) -> bool {
    e[0] == e[1] && e[3] == 0
}

/// Solves `{i q1 p1 + p2^2/2, chi} = -h` for a polynomial `h` free of
/// kernel terms. With `D` the action of `{i q1 p1, .}` (diagonal) and `N`
/// that of `{p2^2/2, .}` (nilpotent): off-diagonal monomials use the
/// terminating series `chi = sum_j (-D^-1 N)^j D^-1 (-h)`; diagonal ones
/// invert `N` monomial by monomial, keeping no pure-`p2` part.
fn solve(h: &Poly) -> Poly {
    let n_op = |p: &Poly| -> Poly {
        // {p2^2/2, q2^a p2^b} = -a q2^(a-1) p2^(b+1)
        let mut out = Poly::new();
        for (e, v) in p {
            if e[2] > 0 {
                add_into(&mut out, [e[0], e[1], e[2] - 1, e[3] + 1], v.clone() * real(q(-(e[2] as i64), 1)));
            }
        }
        out
    };
    let d_inv = |p: &Poly| -> Poly {
        // {i q1 p1, q1^k p1^l} = i (l - k) q1^k p1^l
        let mut out = Poly::new();
        for (e, v) in p {
            let lam = c(Q::zero(), q(e[1] as i64 - e[0] as i64, 1));
            add_into(&mut out, *e, v.clone() / lam);
        }
        out
    };
    let minus_h = scale(h, &real(q(-1, 1)));
    let (diag, off): (Poly, Poly) = minus_h.into_iter().partition(|(e, _)| e[0] == e[1]);
    let mut chi = Poly::new();
    let mut term = d_inv(&off);
    while !term.is_empty() {
        chi = add(&chi, &term);
        term = scale(&d_inv(&n_op(&term)), &real(q(-1, 1)));
    }
    for (e, v) in diag {
        assert!(e[3] >= 1, "kernel term passed to the solver");
        // N(q2^(a+1) p2^(b-1)) = -(a+1) q2^a p2^b
        let a = e[2] as i64;
        add_into(&mut chi, [e[0], e[1], e[2] + 1, e[3] - 1], v * real(q(-1, a + 1)));
    }
    chi
}

/// Normal form after `steps` steps, as `{(n, k2, l2): c}` with
/// `Z = sum c I1^n q2^k2 p2^l2` and `I1 = i q1 p1`.
fn exact_normal_form(steps: u32) -> BTreeMap<(u32, u32, u32), C> {
    let h0 = Poly::from([
        ([1, 1, 0, 0], c(Q::zero(), Q::one())),
        ([0, 0, 0, 2], real(q(1, 2))),
    ]);
    let mut h = builtin_hamiltonian();
    let mut z = Poly::new();
    for r in 1..=steps {
        let hr = degree_part(&h, 2 * r + 2);
        let (kern, rest): (Poly, Poly) = hr.into_iter().partition(|(e, _)| in_kernel(e));
        let chi = solve(&rest);
        // homological equation holds exactly
        let check = add(&bracket(&h0, &chi), &rest);
        assert!(check.is_empty(), "residual at step {r}: {check:?}");
        z = add(&z, &kern);
        h = lie(&h, &chi);
        let new_r = degree_part(&h, 2 * r + 2);
        assert_eq!(new_r, kern, "order {r} not normalized");
    }
    let mut out = BTreeMap::new();
    for (e, v) in z {
        assert_eq!(e[0], e[1]);
        // (q1 p1)^n = (-i)^n I1^n
        let mut f = v;
        for _ in 0..e[0] {
            f = f * c(Q::zero(), q(-1, 1));
        }
        out.insert((e[0], e[2], e[3]), f);
    }
    out
}

#[test]
fn omega2_series_is_exactly_five_sixteenths_and_three_eighths() {
    let nf = exact_normal_form(3);
    let w2 = |n: u32| {
        let v = nf.get(&(n, 2, 0)).cloned().unwrap_or_else(C::zero);
        assert!(v.im.is_zero(), "imaginary coefficient at I1^{n} q2^2");
        v.re * q(2, 1)
    };
    assert_eq!(w2(1), q(1, 1));
    assert_eq!(w2(2), q(5, 16));
    assert_eq!(w2(3), q(3, 8));

    let prepared = complexify_nonresonant(&bottleform::model::build_builtin_model(), 20).unwrap();
    let state = normalize(&prepared, 5, 20).unwrap();
    let series = extract_omega2_squared(&state).unwrap();
    for n in 1..=3u32 {
        let exact = w2(n).to_f64().unwrap();
        assert!((series[n as usize] - exact).abs() < 1e-13, "I1^{n}: {} vs {exact}", series[n as usize]);
    }
}

#[test]
fn exact_anharmonic_terms_match_floating_point_normal_form() {
    let nf = exact_normal_form(3);
    // -3/16 I1^2 and -3/64 I1^3 along the equator
    assert_eq!(nf[&(2, 0, 0)], real(q(-3, 16)));
    assert_eq!(nf[&(3, 0, 0)], real(q(-3, 64)));

    let prepared = complexify_nonresonant(&bottleform::model::build_builtin_model(), 20).unwrap();
    let state = normalize(&prepared, 3, 20).unwrap();
    let float = state.action_form().unwrap();
    for (key, v) in &nf {
        let got = float.get(key).copied().unwrap_or(0.0);
        let exact = v.re.to_f64().unwrap();
        assert!((got - exact).abs() < 1e-13, "{key:?}: {got} vs {exact}");
    }
}
