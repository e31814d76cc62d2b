//! The magnetic-bottle Hamiltonian `H = (p_rho^2 + p_z^2)/2 + V(rho, z)` on the
//! meridian plane, its complex canonical form and the two book-keeping rules.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::parse::{format_polynomial, parse_polynomial, RealPoly2};
use crate::poly::{multiply, CanonicalPolynomial, ExponentKey, MAX_DEGREE};

/// Critical energy of the builtin model: the saddle of `V(rho, 0)`.
pub const BUILTIN_E_CRIT: f64 = 16.0 / 27.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialSource {
    Builtin,
    Parsed,
}

/// Polynomial potential `V(rho, z)` with real coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub terms: RealPoly2,
    pub source: PotentialSource,
}

/// `V = rho^2/2 + rho^2 z^2/2 - rho^4/8 + rho^2 z^4/8 - rho^4 z^2/16 + rho^6/128`
/// (B0 = 2, beta1 = 1).
pub fn build_builtin_model() -> PotentialSpec {
    PotentialSpec {
        terms: RealPoly2::from([
            ((2, 0), 0.5),
            ((2, 2), 0.5),
            ((4, 0), -0.125),
            ((2, 4), 0.125),
            ((4, 2), -0.0625),
            ((6, 0), 1.0 / 128.0),
        ]),
        source: PotentialSource::Builtin,
    }
}

/// Parses a potential from text (see [`crate::parse`] for the grammar).
pub fn parse_potential(text: &str) -> Result<PotentialSpec, ModelError> {
    let terms = parse_polynomial(text)?;
    Ok(PotentialSpec {
        terms,
        source: PotentialSource::Parsed,
    })
}

impl PotentialSpec {
    pub fn to_text(&self) -> String {
        format_polynomial(&self.terms)
    }

    /// Checks the structural requirements of the normal-form construction.
    pub fn validate(&self) -> Result<(), ModelError> {
        for (&(r, z), _) in self.terms.iter() {
            if r % 2 == 1 {
                return Err(ModelError::OddInRho { rho: r, z });
            }
            if z % 2 == 1 {
                return Err(ModelError::OddInZ { rho: r, z });
            }
            if r == 0 {
                return Err(ModelError::PureAxialTerm { z });
            }
            if r + z > MAX_DEGREE {
                return Err(ModelError::DegreeTooHigh(r + z));
            }
        }
        match self.terms.get(&(2, 0)) {
            Some(&c) if c > 0.0 => Ok(()),
            _ => Err(ModelError::MissingQuadratic),
        }
    }

    /// `omega_{1,0} = sqrt(2c)` with `c` the coefficient of `rho^2`.
    pub fn omega10(&self) -> Result<f64, ModelError> {
        match self.terms.get(&(2, 0)) {
            Some(&c) if c > 0.0 => Ok((2.0 * c).sqrt()),
            _ => Err(ModelError::MissingQuadratic),
        }
    }

    pub fn value(&self, rho: f64, z: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(r, zz), &c)| c * rho.powi(r as i32) * z.powi(zz as i32))
            .sum()
    }

    /// `(dV/drho, dV/dz)`.
    pub fn gradient(&self, rho: f64, z: f64) -> (f64, f64) {
        let mut g = (0.0, 0.0);
        for (&(r, zz), &c) in &self.terms {
            if r > 0 {
                g.0 += c * r as f64 * rho.powi(r as i32 - 1) * z.powi(zz as i32);
            }
            if zz > 0 {
                g.1 += c * zz as f64 * rho.powi(r as i32) * z.powi(zz as i32 - 1);
            }
        }
        g
    }

    /// Hessian entries `(V_rr, V_rz, V_zz)`.
    pub fn hessian(&self, rho: f64, z: f64) -> (f64, f64, f64) {
        let mut h = (0.0, 0.0, 0.0);
        for (&(r, zz), &c) in &self.terms {
            let (rf, zf) = (r as f64, zz as f64);
            if r > 1 {
                h.0 += c * rf * (rf - 1.0) * rho.powi(r as i32 - 2) * z.powi(zz as i32);
            }
            if r > 0 && zz > 0 {
                h.1 += c * rf * zf * rho.powi(r as i32 - 1) * z.powi(zz as i32 - 1);
            }
            if zz > 1 {
                h.2 += c * zf * (zf - 1.0) * rho.powi(r as i32) * z.powi(zz as i32 - 2);
            }
        }
        h
    }

    /// Real Hamiltonian `(p_rho^2 + p_z^2)/2 + V`.
    pub fn energy(&self, rho: f64, z: f64, p_rho: f64, p_z: f64) -> f64 {
        0.5 * (p_rho * p_rho + p_z * p_z) + self.value(rho, z)
    }

    /// First local maximum of `V(rho, 0)` for `rho > 0`: `(rho_crit, E_crit)`.
    /// For the builtin model this is `(sqrt(8/3), 16/27)`.
    pub fn critical_point(&self) -> Option<(f64, f64)> {
        let dv = |r: f64| self.gradient(r, 0.0).0;
        let (mut a, mut step) = (1e-3, 1e-2);
        while a < 50.0 {
            let b = a + step;
            if dv(a) > 0.0 && dv(b) <= 0.0 {
                let (mut lo, mut hi) = (a, b);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if dv(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let r = 0.5 * (lo + hi);
                return Some((r, self.value(r, 0.0)));
            }
            a = b;
            step *= 1.01;
        }
        None
    }

    /// Critical energy, or infinity when `V(rho, 0)` has no barrier.
    pub fn critical_energy(&self) -> f64 {
        self.critical_point().map_or(f64::INFINITY, |(_, e)| e)
    }
}

/// Parameters of the `m2:m1` resonant construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceParams {
    pub m1: u32,
    pub m2: u32,
    /// `I1*`
    pub action: f64,
    /// `omega1*`
    pub omega1: f64,
    /// `omega2*`
    pub omega2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Mode {
    Nonresonant,
    Resonant(ResonanceParams),
}

/// Hamiltonian in complex canonical variables with book-keeping applied.
#[derive(Clone, Debug)]
pub struct PreparedHamiltonian {
    pub h: CanonicalPolynomial,
    pub mode: Mode,
    pub omega10: f64,
    pub potential: PotentialSpec,
}

/// Linear map from real to complex canonical variables for one degree of
/// freedom with frequency `w`:
/// `x = (q + i p)/sqrt(2w)`, `p_x = sqrt(w) (i q + p)/sqrt(2)`.
fn forward_linear(w: f64, slot_q: usize) -> (CanonicalPolynomial, CanonicalPolynomial) {
    let cap = MAX_DEGREE;
    let key = |slot: usize| {
        let mut e = [0u32; 4];
        e[slot] = 1;
        ExponentKey::new(e[0], e[1], e[2], e[3])
    };
    let (kq, kp) = (key(slot_q), key(slot_q + 1));
    let a = 1.0 / (2.0 * w).sqrt();
    let b = w.sqrt() / SQRT_2;
    let mut x = CanonicalPolynomial::zero_with_cap(0, cap);
    x.add_term(kq, Complex64::new(a, 0.0), 0);
    x.add_term(kp, Complex64::new(0.0, a), 0);
    let mut px = CanonicalPolynomial::zero_with_cap(0, cap);
    px.add_term(kq, Complex64::new(0.0, b), 0);
    px.add_term(kp, Complex64::new(b, 0.0), 0);
    (x, px)
}

/// Inverse of [`forward_linear`] expressed in the real-variable slots:
/// `q = (sqrt(w) x - i p_x/sqrt(w))/sqrt(2)`, `p = (p_x/sqrt(w) - i sqrt(w) x)/sqrt(2)`.
pub(crate) fn inverse_linear(w: f64, slot: usize) -> (CanonicalPolynomial, CanonicalPolynomial) {
    let key = |s: usize| {
        let mut e = [0u32; 4];
        e[s] = 1;
        ExponentKey::new(e[0], e[1], e[2], e[3])
    };
    let (kx, kpx) = (key(slot), key(slot + 1));
    let sw = w.sqrt();
    let mut q = CanonicalPolynomial::zero_with_cap(0, MAX_DEGREE);
    q.add_term(kx, Complex64::new(sw / SQRT_2, 0.0), 0);
    q.add_term(kpx, Complex64::new(0.0, -1.0 / (sw * SQRT_2)), 0);
    let mut p = CanonicalPolynomial::zero_with_cap(0, MAX_DEGREE);
    p.add_term(kpx, Complex64::new(1.0 / (sw * SQRT_2), 0.0), 0);
    p.add_term(kx, Complex64::new(0.0, -sw / SQRT_2), 0);
    (q, p)
}

fn power(base: &CanonicalPolynomial, n: u32, cache: &mut Vec<CanonicalPolynomial>) -> CanonicalPolynomial {
    if cache.is_empty() {
        let mut one = CanonicalPolynomial::zero_with_cap(0, MAX_DEGREE);
        one.add_term(ExponentKey::default(), Complex64::new(1.0, 0.0), 0);
        cache.push(one);
    }
    while cache.len() <= n as usize {
        let next = multiply(cache.last().unwrap(), base);
        cache.push(next);
    }
    cache[n as usize].clone()
}

/// Complexified potential terms at book-keeping order 0 (real `z` kept as
/// `q2`, `p_z` as `p2` when `omega2` is `None`).
fn complexify_terms(
    v: &PotentialSpec,
    omega10: f64,
    omega2: Option<f64>,
    skip_rho2: bool,
) -> CanonicalPolynomial {
    let (rho, _) = forward_linear(omega10, 0);
    let z = match omega2 {
        Some(w2) => forward_linear(w2, 2).0,
        None => {
            let mut z = CanonicalPolynomial::zero_with_cap(0, MAX_DEGREE);
            z.add_term(ExponentKey::new(0, 0, 1, 0), Complex64::new(1.0, 0.0), 0);
            z
        }
    };
    let mut rho_pows = Vec::new();
    let mut z_pows = Vec::new();
    let mut out = CanonicalPolynomial::zero_with_cap(0, MAX_DEGREE);
    for (&(r, zz), &c) in &v.terms {
        if skip_rho2 && (r, zz) == (2, 0) {
            continue;
        }
        let t = multiply(&power(&rho, r, &mut rho_pows), &power(&z, zz, &mut z_pows));
        out.add_assign_poly(&t.scale(Complex64::new(c, 0.0)));
    }
    out
}

fn grade_by_degree(p: &CanonicalPolynomial, trunc: u32) -> CanonicalPolynomial {
    p.regrade(|t| t.key.degree().saturating_sub(2) / 2, trunc)
}

/// Nonresonant preparation: complex `(q1, p1)` for the gyration, `q2 = z`,
/// `p2 = p_z`, and book-keeping order `s` for terms of degree `2s + 2`.
pub fn complexify_nonresonant(v: &PotentialSpec, trunc: u32) -> Result<PreparedHamiltonian, ModelError> {
    v.validate()?;
    let w = v.omega10()?;
    let mut h = CanonicalPolynomial::zero(trunc);
    h.add_term(ExponentKey::new(1, 1, 0, 0), Complex64::new(0.0, w), 0);
    h.add_term(ExponentKey::new(0, 0, 0, 2), Complex64::new(0.5, 0.0), 0);
    let rest = grade_by_degree(&complexify_terms(v, w, None, true), trunc);
    h.add_assign_poly(&rest);
    Ok(PreparedHamiltonian {
        h,
        mode: Mode::Nonresonant,
        omega10: w,
        potential: v.clone(),
    })
}

/// Resonant preparation with detuning: order 0 is
/// `i w1* q1 p1 + i w2* q2 p2`; the subtracted detuning terms and the quartic
/// part of the potential sit at order 1, degree `2s + 2` at order `s` above.
pub fn prepare_resonant(
    v: &PotentialSpec,
    m1: u32,
    m2: u32,
    action: f64,
    omega1: f64,
    omega2: f64,
    trunc: u32,
) -> Result<PreparedHamiltonian, ModelError> {
    if !(omega2 > 0.0) || !omega2.is_finite() {
        return Err(ModelError::InvalidFrequency(omega2));
    }
    v.validate()?;
    let w10 = v.omega10()?;
    let mut h = CanonicalPolynomial::zero(trunc);
    h.add_term(ExponentKey::new(1, 1, 0, 0), Complex64::new(0.0, omega1), 0);
    h.add_term(ExponentKey::new(0, 0, 1, 1), Complex64::new(0.0, omega2), 0);
    // -i (w1* - w10) q1 p1
    h.add_term(ExponentKey::new(1, 1, 0, 0), Complex64::new(0.0, -(omega1 - w10)), 1);
    // -(w2*)^2 z^2 / 2 with z = (q2 + i p2)/sqrt(2 w2*)
    let s = -omega2 / 4.0;
    h.add_term(ExponentKey::new(0, 0, 2, 0), Complex64::new(s, 0.0), 1);
    h.add_term(ExponentKey::new(0, 0, 1, 1), Complex64::new(0.0, 2.0 * s), 1);
    h.add_term(ExponentKey::new(0, 0, 0, 2), Complex64::new(-s, 0.0), 1);
    let rest = grade_by_degree(&complexify_terms(v, w10, Some(omega2), true), trunc);
    h.add_assign_poly(&rest);
    Ok(PreparedHamiltonian {
        h,
        mode: Mode::Resonant(ResonanceParams {
            m1,
            m2,
            action,
            omega1,
            omega2,
        }),
        omega10: w10,
        potential: v.clone(),
    })
}

impl PreparedHamiltonian {
    /// Complex canonical coordinates of a real phase-space point.
    pub fn to_complex(&self, rho: f64, p_rho: f64, z: f64, p_z: f64) -> [Complex64; 4] {
        to_complex_point(self.omega10, &self.mode, rho, p_rho, z, p_z)
    }

    /// Terms at book-keeping order 0.
    pub fn h0(&self) -> CanonicalPolynomial {
        self.h.order(0)
    }
}

/// `(q1, p1, q2, p2)` of the real point `(rho, p_rho, z, p_z)`.
pub fn to_complex_point(
    omega10: f64,
    mode: &Mode,
    rho: f64,
    p_rho: f64,
    z: f64,
    p_z: f64,
) -> [Complex64; 4] {
    let pair = |w: f64, x: f64, px: f64| {
        let sw = w.sqrt();
        (
            Complex64::new(sw * x, -px / sw) / SQRT_2,
            Complex64::new(px / sw, -sw * x) / SQRT_2,
        )
    };
    let (q1, p1) = pair(omega10, rho, p_rho);
    let (q2, p2) = match mode {
        Mode::Nonresonant => (Complex64::new(z, 0.0), Complex64::new(p_z, 0.0)),
        Mode::Resonant(r) => pair(r.omega2, z, p_z),
    };
    [q1, p1, q2, p2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_potential_values() {
        let v = build_builtin_model();
        for z in [-1.0, 0.0, 0.3, 2.0] {
            assert_eq!(v.value(0.0, z), 0.0);
        }
        assert!((v.value(1.0, 1.0) - 0.9453125).abs() < 1e-15);
        for rho in [0.2f64, 0.9, 1.7] {
            let expect = 0.5 * rho * rho * (1.0 - rho * rho / 8.0).powi(2);
            assert!((v.value(rho, 0.0) - expect).abs() < 1e-15);
        }
        let (rc, ec) = v.critical_point().unwrap();
        assert!((rc - (8.0f64 / 3.0).sqrt()).abs() < 1e-10);
        assert!((ec - BUILTIN_E_CRIT).abs() < 1e-12);
    }

    #[test]
    fn builtin_text_round_trip() {
        let v = build_builtin_model();
        let back = parse_potential(&v.to_text()).unwrap();
        for (k, c) in &v.terms {
            assert!((back.terms[k] - c).abs() < 1e-15);
        }
        assert_eq!(back.terms.len(), v.terms.len());
    }

    #[test]
    fn quadratic_part_and_degree_census() {
        let prep = complexify_nonresonant(&build_builtin_model(), 10).unwrap();
        let h0 = prep.h0();
        assert_eq!(h0.len(), 2);
        assert_eq!(h0.coeff(ExponentKey::new(1, 1, 0, 0), 0), Complex64::new(0.0, 1.0));
        assert_eq!(h0.coeff(ExponentKey::new(0, 0, 0, 2), 0), Complex64::new(0.5, 0.0));
        let mut degrees: Vec<(u32, u32)> = prep.h.iter().map(|t| (t.key.degree(), t.bk_order)).collect();
        degrees.sort();
        degrees.dedup();
        let ds: std::collections::BTreeSet<u32> = degrees.iter().map(|d| d.0).collect();
        assert_eq!(ds.into_iter().collect::<Vec<_>>(), vec![2, 4, 6]);
        assert!(degrees.iter().all(|&(d, bk)| d == 2 * bk + 2));
    }

    #[test]
    fn rho_squared_expands() {
        // rho^2 = (q1 + i p1)^2 / 2 with omega10 = 1
        let (rho, _) = forward_linear(1.0, 0);
        let sq = multiply(&rho, &rho);
        assert!((sq.coeff(ExponentKey::new(2, 0, 0, 0), 0) - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((sq.coeff(ExponentKey::new(1, 1, 0, 0), 0) - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((sq.coeff(ExponentKey::new(0, 2, 0, 0), 0) - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn complexified_hamiltonian_is_real_on_real_points() {
        let v = build_builtin_model();
        let prep = complexify_nonresonant(&v, 10).unwrap();
        for &(r, pr, z, pz) in &[(0.3, -0.2, 0.5, 0.1), (-0.7, 0.4, -0.2, 0.6), (0.1, 0.1, 1.2, -0.3)] {
            let val = prep.h.evaluate(prep.to_complex(r, pr, z, pz));
            assert!(val.im.abs() < 1e-12);
            assert!((val.re - v.energy(r, z, pr, pz)).abs() < 1e-13);
        }
    }

    #[test]
    fn resonant_preparation_recovers_hamiltonian() {
        let v = build_builtin_model();
        let prep = prepare_resonant(&v, 2, 1, 0.18, 0.9, 0.45, 10).unwrap();
        let h0 = prep.h0();
        assert_eq!(h0.len(), 2);
        for &(r, pr, z, pz) in &[(0.3, -0.2, 0.5, 0.1), (-0.7, 0.4, -0.2, 0.6)] {
            let val = prep.h.evaluate(prep.to_complex(r, pr, z, pz));
            assert!(val.im.abs() < 1e-12);
            assert!((val.re - v.energy(r, z, pr, pz)).abs() < 1e-13);
        }
    }

    #[test]
    fn structural_errors() {
        let v = build_builtin_model();
        assert!(matches!(
            prepare_resonant(&v, 2, 1, 0.1, 1.0, 0.0, 5),
            Err(ModelError::InvalidFrequency(_))
        ));
        let no_quad = parse_potential("rho^2*z^2 - rho^4").unwrap();
        assert!(matches!(complexify_nonresonant(&no_quad, 5), Err(ModelError::MissingQuadratic)));
        let odd = parse_potential("0.5*rho^2 + rho^3").unwrap();
        assert!(matches!(complexify_nonresonant(&odd, 5), Err(ModelError::OddInRho { .. })));
        let axial = parse_potential("0.5*rho^2 + z^4").unwrap();
        assert!(matches!(complexify_nonresonant(&axial, 5), Err(ModelError::PureAxialTerm { .. })));
    }
}
