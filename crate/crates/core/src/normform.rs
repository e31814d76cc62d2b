//! Recursive Lie-series normalization.
//!
//! At step `r` the order-`r` part of the current Hamiltonian is split into
//! its kernel part (kept as `Z_r`) and the rest `H~_r`, the homological
//! equation `{Z_0, chi_r} = -H~_r` is solved, and the whole Hamiltonian is
//! replaced by `exp(L_chi_r) H`.
//!
//! In the nonresonant case `Z_0 = i w q1 p1 + p2^2/2` is not diagonal on
//! monomials: inside a block of fixed `(k1, l1)` and fixed `k2 + l2 = D` the
//! equation couples `q2^n p2^(D-n)` to `q2^(n+1) p2^(D-n-1)` and is solved by
//! back substitution. In the resonant case `Z_0 = i w1 q1 p1 + i w2 q2 p2`
//! and every monomial is an eigenvector.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::NormalFormError;
use crate::model::{Mode, PreparedHamiltonian};
use crate::poly::{lie_transform, poisson_bracket, CanonicalPolynomial, Direction, ExponentKey};

/// Top coefficient of a `k = l` block must vanish to this tolerance.
pub const BLOCK_CONSISTENCY_TOL: f64 = 1e-12;

/// Default floor for resonant divisors.
pub const SMALL_DIVISOR_FLOOR: f64 = 1e-9;

pub const DEFAULT_R_MAX: u32 = 15;
pub const DEFAULT_R_TRUNC: u32 = 20;

/// Which monomials stay in the normal form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelSet {
    /// `k1 = l1` and (`k2 = 0, l2 = 2` when `k1 + l1 = 0`, `l2 = 0` otherwise).
    Nonresonant,
    /// `(k1 - l1) m1 + (k2 - l2) m2 = 0`.
    Resonant { m1: u32, m2: u32 },
}

impl KernelSet {
    pub fn for_mode(mode: &Mode) -> Self {
        match mode {
            Mode::Nonresonant => KernelSet::Nonresonant,
            Mode::Resonant(p) => KernelSet::Resonant { m1: p.m1, m2: p.m2 },
        }
    }

    pub fn contains(&self, key: &ExponentKey) -> bool {
        match *self {
            KernelSet::Nonresonant => {
                key.k1 == key.l1
                    && if key.k1 + key.l1 == 0 {
                        key.k2 == 0 && key.l2 == 2
                    } else {
                        key.l2 == 0
                    }
            }
            KernelSet::Resonant { m1, m2 } => {
                (key.k1 as i64 - key.l1 as i64) * m1 as i64 + (key.k2 as i64 - key.l2 as i64) * m2 as i64 == 0
            }
        }
    }
}

/// Solves `{i w q1 p1 + p2^2/2, chi} = -H~` block by block.
///
/// `htilde` must contain no kernel terms. The arbitrary coefficient of
/// `q2^0 p2^D` in each `k1 = l1` block is fixed to zero.
pub fn solve_homological_nonresonant(
    htilde: &CanonicalPolynomial,
    omega10: f64,
) -> Result<CanonicalPolynomial, NormalFormError> {
    // (k1, l1, D, bk) -> coefficients a_n = -h_{k1, l1, n, D - n}
    let mut blocks: BTreeMap<(u32, u32, u32, u32), Vec<Complex64>> = BTreeMap::new();
    for t in htilde.iter() {
        let d = t.key.k2 + t.key.l2;
        let a = blocks
            .entry((t.key.k1, t.key.l1, d, t.bk_order))
            .or_insert_with(|| vec![Complex64::default(); d as usize + 1]);
        a[t.key.k2 as usize] -= t.coeff;
    }
    let mut chi = CanonicalPolynomial::zero_with_cap(htilde.trunc_order(), htilde.degree_cap());
    for ((k, l, d, bk), a) in blocks {
        let d = d as usize;
        let mut b = vec![Complex64::default(); d + 1];
        if k != l {
            let c = Complex64::new(0.0, (l as f64 - k as f64) * omega10);
            b[d] = a[d] / c;
            for n in (0..d).rev() {
                b[n] = (a[n] + b[n + 1] * (n as f64 + 1.0)) / c;
            }
        } else {
            if a[d].norm() > BLOCK_CONSISTENCY_TOL {
                return Err(NormalFormError::InconsistentBlock {
                    k,
                    l,
                    value: a[d].norm(),
                });
            }
            for n in 0..d {
                b[n + 1] = -a[n] / (n as f64 + 1.0);
            }
        }
        for (n, &bn) in b.iter().enumerate() {
            chi.add_term(ExponentKey::new(k, l, n as u32, (d - n) as u32), bn, bk);
        }
    }
    chi.prune();
    Ok(chi)
}

/// Solves `{i w1 q1 p1 + i w2 q2 p2, chi} = -H~` monomial by monomial.
pub fn solve_homological_resonant(
    htilde: &CanonicalPolynomial,
    omega1: f64,
    omega2: f64,
    floor: f64,
) -> Result<CanonicalPolynomial, NormalFormError> {
    let mut chi = CanonicalPolynomial::zero_with_cap(htilde.trunc_order(), htilde.degree_cap());
    for t in htilde.sorted_terms() {
        let k = t.key;
        let divisor = (k.k1 as f64 - k.l1 as f64) * omega1 + (k.k2 as f64 - k.l2 as f64) * omega2;
        if divisor.abs() < floor {
            return Err(NormalFormError::SmallDivisor {
                key: k,
                divisor,
                floor,
            });
        }
        chi.add_term(k, t.coeff / Complex64::new(0.0, divisor), t.bk_order);
    }
    chi.prune();
    Ok(chi)
}

/// Hamiltonian after `step` normalization steps.
#[derive(Clone, Debug)]
pub struct NormalizationState {
    pub step: u32,
    pub r_trunc: u32,
    pub mode: Mode,
    pub omega10: f64,
    /// Saddle energy of the potential along the equator.
    pub critical_energy: f64,
    /// `Z_0 .. Z_step`, one polynomial per book-keeping order.
    pub z: Vec<CanonicalPolynomial>,
    /// The full transformed Hamiltonian `H^(step)`.
    pub hamiltonian: CanonicalPolynomial,
    /// `chi_1 .. chi_step`.
    pub generators: Vec<CanonicalPolynomial>,
    /// `max |{Z_0, chi_r} + H~_r|` per step.
    pub residuals: Vec<f64>,
    /// `max |H~_r|` per step, the scale the residual is measured against.
    pub residual_scales: Vec<f64>,
}

impl NormalizationState {
    /// Residual of step `r` (1-based) divided by `max(1, max |H~_r|)`.
    pub fn scaled_residual(&self, r: u32) -> f64 {
        let i = r as usize - 1;
        self.residuals[i] / self.residual_scales[i].max(1.0)
    }

    pub fn kernel(&self) -> KernelSet {
        KernelSet::for_mode(&self.mode)
    }

    /// `Z_0 + ... + Z_step` (keeps the per-term orders).
    pub fn normal_form(&self) -> CanonicalPolynomial {
        let mut out = CanonicalPolynomial::zero(self.r_trunc);
        for z in &self.z {
            out.add_assign_poly(z);
        }
        out
    }

    /// Terms of `H^(step)` at orders above `step`.
    pub fn remainder(&self) -> CanonicalPolynomial {
        let s = self.step;
        self.hamiltonian.filter(|t| t.bk_order > s)
    }

    /// Nonresonant normal form rewritten in `I1 = i q1 p1`: maps
    /// `(n, k2, l2)` to the real coefficient of `I1^n q2^k2 p2^l2` (λ = 1).
    pub fn action_form(&self) -> Result<BTreeMap<(u32, u32, u32), f64>, NormalFormError> {
        let mut out: BTreeMap<(u32, u32, u32), Complex64> = BTreeMap::new();
        for z in &self.z {
            for t in z.iter() {
                if t.key.k1 != t.key.l1 {
                    return Err(NormalFormError::Mode(format!(
                        "normal-form term {} depends on the gyration angle",
                        t.key
                    )));
                }
                // (q1 p1)^n = (-i)^n I1^n
                let c = t.coeff * Complex64::new(0.0, -1.0).powu(t.key.k1);
                *out.entry((t.key.k1, t.key.k2, t.key.l2)).or_default() += c;
            }
        }
        Ok(out.into_iter().map(|(k, c)| (k, c.re)).collect())
    }
}

/// Runs `r_max` normalization steps, calling `observe` after every step
/// (including step 0, before any transformation).
pub fn normalize_each<F>(
    prepared: &PreparedHamiltonian,
    r_max: u32,
    r_trunc: u32,
    mut observe: F,
) -> Result<NormalizationState, NormalFormError>
where
    F: FnMut(&NormalizationState),
{
    if r_max > r_trunc {
        return Err(NormalFormError::OrderOverflow { r_max, r_trunc });
    }
    let h = prepared.h.with_trunc(r_trunc);
    let kernel = KernelSet::for_mode(&prepared.mode);
    let z0 = h.order(0);
    let z0_op = z0.clone();
    let mut state = NormalizationState {
        step: 0,
        r_trunc,
        mode: prepared.mode,
        omega10: prepared.omega10,
        critical_energy: prepared.potential.critical_energy(),
        z: vec![z0],
        hamiltonian: h,
        generators: Vec::new(),
        residuals: Vec::new(),
        residual_scales: Vec::new(),
    };
    observe(&state);
    for r in 1..=r_max {
        let hr = state.hamiltonian.order(r);
        let (kern, htilde) = hr.partition(|t| kernel.contains(&t.key));
        let chi = match prepared.mode {
            Mode::Nonresonant => solve_homological_nonresonant(&htilde, prepared.omega10)?,
            Mode::Resonant(p) => solve_homological_resonant(&htilde, p.omega1, p.omega2, SMALL_DIVISOR_FLOOR)?,
        };
        let mut check = poisson_bracket(&z0_op, &chi);
        check.add_assign_poly(&htilde);
        state.residuals.push(check.max_abs_coeff());
        state.residual_scales.push(htilde.max_abs_coeff());

        let transformed = lie_transform(&state.hamiltonian, &chi, Direction::Forward)?;
        // The order-r part is Z_r up to round-off; store it exactly.
        let mut next = transformed.filter(|t| t.bk_order != r);
        next.add_assign_poly(&kern);
        state.hamiltonian = next;
        state.z.push(kern);
        state.generators.push(chi);
        state.step = r;
        log::debug!(
            "step {r}: {} terms, residual {:.2e}",
            state.hamiltonian.len(),
            state.residuals.last().unwrap()
        );
        observe(&state);
    }
    Ok(state)
}

pub fn normalize(
    prepared: &PreparedHamiltonian,
    r_max: u32,
    r_trunc: u32,
) -> Result<NormalizationState, NormalFormError> {
    normalize_each(prepared, r_max, r_trunc, |_| {})
}

/// `omega_2^2(I1) = sum_n 2 c_n I1^n` where `c_n` is the coefficient of
/// `I1^n q2^2` in the normal form. Index `n` of the result is the power.
pub fn extract_omega2_squared(state: &NormalizationState) -> Result<Vec<f64>, NormalFormError> {
    if !matches!(state.mode, Mode::Nonresonant) {
        return Err(NormalFormError::Mode(
            "omega_2^2(I1) is defined for the nonresonant normal form only".into(),
        ));
    }
    if state.step < 1 {
        return Err(NormalFormError::Mode("need at least one normalization step".into()));
    }
    let form = state.action_form()?;
    let max_n = form.keys().map(|k| k.0).max().unwrap_or(0) as usize;
    let mut out = vec![0.0; max_n + 1];
    for (&(n, k2, l2), &c) in &form {
        if k2 == 2 && l2 == 0 {
            out[n as usize] += 2.0 * c;
        }
    }
    while out.len() > 1 && *out.last().unwrap() == 0.0 {
        out.pop();
    }
    Ok(out)
}

/// Coefficients of `Z(I1, q2 = 0, p2 = 0) = sum_n a_n I1^n`.
pub fn equatorial_series(state: &NormalizationState) -> Result<Vec<f64>, NormalFormError> {
    if !matches!(state.mode, Mode::Nonresonant) {
        return Err(NormalFormError::Mode(
            "the equatorial series is defined for the nonresonant normal form only".into(),
        ));
    }
    let form = state.action_form()?;
    let max_n = form.keys().map(|k| k.0).max().unwrap_or(0) as usize;
    let mut out = vec![0.0; max_n + 1];
    for (&(n, k2, l2), &c) in &form {
        if k2 == 0 && l2 == 0 {
            out[n as usize] += c;
        }
    }
    Ok(out)
}
