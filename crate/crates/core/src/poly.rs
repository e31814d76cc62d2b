//! Sparse graded polynomials in the canonical variables `(q1, p1, q2, p2)`.
//!
//! Every term carries its own book-keeping order (the power of the formal
//! parameter λ). The same monomial may appear at several orders, which is
//! what the resonant construction needs, so a term is identified by the
//! pair (exponents, order).
//!
//! Terms are stored in a hash map keyed by a packed `u64`:
//!
//! ```text
//! bits 56..64  k1     bits 48..56  l1
//! bits 40..48  k2     bits 32..40  l2
//! bits  0..32  book-keeping order
//! ```
//!
//! so integer order on the packed key equals lexicographic order on
//! `(k1, l1, k2, l2, bk)`, and adding two keys adds exponents and orders.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::PolyError;

/// Coefficients with modulus below this are dropped after every operation.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Largest total degree a series may be configured to hold. Two factors of
/// this degree still fit in the 8-bit exponent fields of a packed key.
pub const MAX_DEGREE: u32 = 120;

/// Largest supported truncation order.
pub const MAX_TRUNC: u32 = 59;

const K1_SHIFT: u32 = 56;
const L1_SHIFT: u32 = 48;
const K2_SHIFT: u32 = 40;
const L2_SHIFT: u32 = 32;
const BK_MASK: u64 = 0xffff_ffff;
const Q1P1: u64 = (1 << K1_SHIFT) | (1 << L1_SHIFT);
const Q2P2: u64 = (1 << K2_SHIFT) | (1 << L2_SHIFT);

/// Exponents of `q1^k1 p1^l1 q2^k2 p2^l2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExponentKey {
    pub k1: u32,
    pub l1: u32,
    pub k2: u32,
    pub l2: u32,
}

impl ExponentKey {
    pub const fn new(k1: u32, l1: u32, k2: u32, l2: u32) -> Self {
        Self { k1, l1, k2, l2 }
    }

    pub fn degree(&self) -> u32 {
        self.k1 + self.l1 + self.k2 + self.l2
    }

    fn pack(&self, bk: u32) -> Result<u64, PolyError> {
        if self.degree() > MAX_DEGREE {
            return Err(PolyError::DegreeOverflow {
                degree: self.degree(),
                cap: MAX_DEGREE,
            });
        }
        Ok(((self.k1 as u64) << K1_SHIFT)
            | ((self.l1 as u64) << L1_SHIFT)
            | ((self.k2 as u64) << K2_SHIFT)
            | ((self.l2 as u64) << L2_SHIFT)
            | bk as u64)
    }

    fn unpack(packed: u64) -> (Self, u32) {
        (
            Self {
                k1: ((packed >> K1_SHIFT) & 0xff) as u32,
                l1: ((packed >> L1_SHIFT) & 0xff) as u32,
                k2: ((packed >> K2_SHIFT) & 0xff) as u32,
                l2: ((packed >> L2_SHIFT) & 0xff) as u32,
            },
            (packed & BK_MASK) as u32,
        )
    }
}

impl fmt::Display for ExponentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.k1, self.l1, self.k2, self.l2)
    }
}

/// One term of a [`CanonicalPolynomial`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradedTerm {
    pub key: ExponentKey,
    pub coeff: Complex64,
    pub bk_order: u32,
}

#[inline]
fn packed_degree(p: u64) -> u32 {
    ((p >> K1_SHIFT) & 0xff) as u32
        + ((p >> L1_SHIFT) & 0xff) as u32
        + ((p >> K2_SHIFT) & 0xff) as u32
        + ((p >> L2_SHIFT) & 0xff) as u32
}

#[inline]
fn packed_bk(p: u64) -> u32 {
    (p & BK_MASK) as u32
}

/// A truncated power series in λ whose coefficients are polynomials in the
/// four canonical variables.
#[derive(Clone, Debug)]
pub struct CanonicalPolynomial {
    terms: FxHashMap<u64, Complex64>,
    trunc: u32,
    degree_cap: u32,
}

impl PartialEq for CanonicalPolynomial {
    fn eq(&self, other: &Self) -> bool {
        self.trunc == other.trunc && self.terms == other.terms
    }
}

/// Sign of the Lie generator in [`lie_transform`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `exp(L_chi)`
    Forward,
    /// `exp(-L_chi)`
    Inverse,
}

impl CanonicalPolynomial {
    /// The zero polynomial truncated at `trunc`, with the default degree cap
    /// `2 * trunc + 2`.
    pub fn zero(trunc: u32) -> Self {
        let trunc = trunc.min(MAX_TRUNC);
        Self {
            terms: FxHashMap::default(),
            trunc,
            degree_cap: (2 * trunc + 2).min(MAX_DEGREE),
        }
    }

    /// Zero polynomial with an explicit degree cap (clamped to [`MAX_DEGREE`]).
    pub fn zero_with_cap(trunc: u32, degree_cap: u32) -> Self {
        let mut p = Self::zero(trunc);
        p.degree_cap = degree_cap.min(MAX_DEGREE);
        p
    }

    /// A single monomial `coeff * q1^k1 p1^l1 q2^k2 p2^l2` at order `bk`.
    pub fn monomial(key: ExponentKey, coeff: Complex64, bk: u32, trunc: u32) -> Self {
        let mut p = Self::zero(trunc);
        p.add_term(key, coeff, bk);
        p
    }

    /// Builds a polynomial from `(key, coeff, bk)` triples; duplicates are summed.
    pub fn from_terms<I>(terms: I, trunc: u32) -> Self
    where
        I: IntoIterator<Item = (ExponentKey, Complex64, u32)>,
    {
        let mut p = Self::zero(trunc);
        for (key, c, bk) in terms {
            p.add_term(key, c, bk);
        }
        p.prune();
        p
    }

    pub fn trunc_order(&self) -> u32 {
        self.trunc
    }

    pub fn degree_cap(&self) -> u32 {
        self.degree_cap
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `coeff` to the term `(key, bk)`. Terms beyond the truncation
    /// order or the degree cap are ignored. No pruning is done here.
    pub fn add_term(&mut self, key: ExponentKey, coeff: Complex64, bk: u32) {
        if bk > self.trunc || key.degree() > self.degree_cap {
            return;
        }
        if let Ok(packed) = key.pack(bk) {
            *self.terms.entry(packed).or_default() += coeff;
        }
    }

    /// Coefficient of `(key, bk)`, zero when absent.
    pub fn coeff(&self, key: ExponentKey, bk: u32) -> Complex64 {
        key.pack(bk)
            .ok()
            .and_then(|p| self.terms.get(&p).copied())
            .unwrap_or_default()
    }

    /// Sum of the coefficients of `key` over all book-keeping orders
    /// (the coefficient seen at λ = 1).
    pub fn coeff_summed(&self, key: ExponentKey) -> Complex64 {
        self.iter()
            .filter(|t| t.key == key)
            .map(|t| t.coeff)
            .sum()
    }

    /// Terms in deterministic (lexicographic `(k1, l1, k2, l2, bk)`) order.
    pub fn sorted_terms(&self) -> Vec<GradedTerm> {
        let mut keys: Vec<u64> = self.terms.keys().copied().collect();
        keys.sort_unstable();
        keys.into_iter()
            .map(|p| {
                let (key, bk) = ExponentKey::unpack(p);
                GradedTerm {
                    key,
                    coeff: self.terms[&p],
                    bk_order: bk,
                }
            })
            .collect()
    }

    /// Unordered iteration.
    pub fn iter(&self) -> impl Iterator<Item = GradedTerm> + '_ {
        self.terms.iter().map(|(&p, &c)| {
            let (key, bk) = ExponentKey::unpack(p);
            GradedTerm {
                key,
                coeff: c,
                bk_order: bk,
            }
        })
    }

    pub fn min_bk(&self) -> Option<u32> {
        self.terms.keys().map(|&p| packed_bk(p)).min()
    }

    pub fn max_bk(&self) -> Option<u32> {
        self.terms.keys().map(|&p| packed_bk(p)).max()
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().map(|&p| packed_degree(p)).max()
    }

    /// Drops terms with `|coeff| < PRUNE_THRESHOLD`.
    pub fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() >= PRUNE_THRESHOLD);
    }

    /// Lowers the truncation order, discarding terms above it.
    pub fn truncate(&mut self, trunc: u32) {
        if trunc < self.trunc {
            self.trunc = trunc;
            self.terms.retain(|&p, _| packed_bk(p) <= trunc);
        }
    }

    /// Same terms with a different truncation order (terms above it dropped).
    pub fn with_trunc(&self, trunc: u32) -> Self {
        let trunc = trunc.min(MAX_TRUNC);
        let mut out = Self {
            terms: self
                .terms
                .iter()
                .filter(|(&p, _)| packed_bk(p) <= trunc)
                .map(|(&p, &c)| (p, c))
                .collect(),
            trunc,
            degree_cap: self.degree_cap.max((2 * trunc + 2).min(MAX_DEGREE)),
        };
        out.degree_cap = out.degree_cap.min(MAX_DEGREE);
        out
    }

    /// Terms at a single book-keeping order.
    pub fn order(&self, bk: u32) -> Self {
        self.filter(|t| t.bk_order == bk)
    }

    /// Terms for which `pred` holds.
    pub fn filter<F: Fn(&GradedTerm) -> bool>(&self, pred: F) -> Self {
        let mut out = Self {
            terms: FxHashMap::default(),
            trunc: self.trunc,
            degree_cap: self.degree_cap,
        };
        for (&p, &c) in &self.terms {
            let (key, bk) = ExponentKey::unpack(p);
            if pred(&GradedTerm {
                key,
                coeff: c,
                bk_order: bk,
            }) {
                out.terms.insert(p, c);
            }
        }
        out
    }

    /// Splits into (terms where `pred` holds, the rest).
    pub fn partition<F: Fn(&GradedTerm) -> bool>(&self, pred: F) -> (Self, Self) {
        let mut yes = Self::zero_like(self);
        let mut no = Self::zero_like(self);
        for (&p, &c) in &self.terms {
            let (key, bk) = ExponentKey::unpack(p);
            let t = GradedTerm {
                key,
                coeff: c,
                bk_order: bk,
            };
            if pred(&t) {
                yes.terms.insert(p, c);
            } else {
                no.terms.insert(p, c);
            }
        }
        (yes, no)
    }

    fn zero_like(other: &Self) -> Self {
        Self {
            terms: FxHashMap::default(),
            trunc: other.trunc,
            degree_cap: other.degree_cap,
        }
    }

    /// Applies `f` to every coefficient.
    pub fn map_coeffs<F: Fn(&GradedTerm) -> Complex64>(&self, f: F) -> Self {
        let mut out = Self::zero_like(self);
        for t in self.iter() {
            let c = f(&t);
            out.add_term(t.key, c, t.bk_order);
        }
        out.prune();
        out
    }

    /// Moves every term to order `bk` (used when λ is set to one).
    pub fn regrade<F: Fn(&GradedTerm) -> u32>(&self, grade: F, trunc: u32) -> Self {
        let mut out = Self::zero(trunc);
        out.degree_cap = self.degree_cap;
        for t in self.iter() {
            out.add_term(t.key, t.coeff, grade(&t));
        }
        out.prune();
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero_like(self);
        if s != Complex64::new(0.0, 0.0) {
            out.terms = self.terms.iter().map(|(&p, &c)| (p, c * s)).collect();
        }
        out.prune();
        out
    }

    /// In-place `self += other`.
    pub fn add_assign_poly(&mut self, other: &Self) {
        self.trunc = self.trunc.min(other.trunc);
        self.degree_cap = self.degree_cap.min(other.degree_cap);
        let (trunc, cap) = (self.trunc, self.degree_cap);
        self.terms
            .retain(|&p, _| packed_bk(p) <= trunc && packed_degree(p) <= cap);
        for (&p, &c) in &other.terms {
            if packed_bk(p) <= trunc && packed_degree(p) <= cap {
                *self.terms.entry(p).or_default() += c;
            }
        }
        self.prune();
    }

    /// Sum of coefficient moduli.
    pub fn l1_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    /// Largest coefficient modulus.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Evaluates the polynomial at `(q1, p1, q2, p2)` with λ = 1.
    pub fn evaluate(&self, point: [Complex64; 4]) -> Complex64 {
        let max_deg = self.max_degree().unwrap_or(0) as usize;
        let powers: Vec<Vec<Complex64>> = point
            .iter()
            .map(|&x| {
                let mut v = Vec::with_capacity(max_deg + 1);
                let mut acc = Complex64::new(1.0, 0.0);
                for _ in 0..=max_deg {
                    v.push(acc);
                    acc *= x;
                }
                v
            })
            .collect();
        self.sorted_terms()
            .iter()
            .map(|t| {
                t.coeff
                    * powers[0][t.key.k1 as usize]
                    * powers[1][t.key.l1 as usize]
                    * powers[2][t.key.k2 as usize]
                    * powers[3][t.key.l2 as usize]
            })
            .sum()
    }

    /// Partial derivative with respect to variable `var` (0 = q1, 1 = p1,
    /// 2 = q2, 3 = p2). Monomials with a zero exponent simply vanish.
    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero_like(self);
        for t in self.iter() {
            let mut key = t.key;
            let e = match var {
                0 => &mut key.k1,
                1 => &mut key.l1,
                2 => &mut key.k2,
                _ => &mut key.l2,
            };
            if *e == 0 {
                continue;
            }
            let n = *e as f64;
            *e -= 1;
            out.add_term(key, t.coeff * n, t.bk_order);
        }
        out.prune();
        out
    }

    fn by_order(&self) -> Vec<Vec<(u64, Complex64)>> {
        let mut groups: Vec<Vec<(u64, Complex64)>> = vec![Vec::new(); self.trunc as usize + 1];
        for (&p, &c) in &self.terms {
            groups[packed_bk(p) as usize].push((p, c));
        }
        for g in &mut groups {
            g.sort_unstable_by_key(|&(p, _)| p);
        }
        groups
    }
}

#[inline]
fn exps(p: u64) -> [i64; 4] {
    [
        ((p >> K1_SHIFT) & 0xff) as i64,
        ((p >> L1_SHIFT) & 0xff) as i64,
        ((p >> K2_SHIFT) & 0xff) as i64,
        ((p >> L2_SHIFT) & 0xff) as i64,
    ]
}

/// Termwise sum; the result is truncated at the smaller truncation order.
pub fn add(a: &CanonicalPolynomial, b: &CanonicalPolynomial) -> CanonicalPolynomial {
    let mut out = a.clone();
    out.add_assign_poly(b);
    out
}

pub fn sub(a: &CanonicalPolynomial, b: &CanonicalPolynomial) -> CanonicalPolynomial {
    add(a, &b.scale(Complex64::new(-1.0, 0.0)))
}

/// Distributive product. Orders add; terms beyond the truncation order or
/// the degree cap are discarded.
pub fn multiply(a: &CanonicalPolynomial, b: &CanonicalPolynomial) -> CanonicalPolynomial {
    let trunc = a.trunc.min(b.trunc);
    let cap = a.degree_cap.min(b.degree_cap);
    let mut out = CanonicalPolynomial {
        terms: FxHashMap::default(),
        trunc,
        degree_cap: cap,
    };
    let ga = a.by_order();
    let gb = b.by_order();
    for (sa, ta) in ga.iter().enumerate() {
        if sa as u32 > trunc {
            break;
        }
        for (sb, tb) in gb.iter().enumerate() {
            if (sa + sb) as u32 > trunc {
                break;
            }
            for &(pa, ca) in ta {
                let da = packed_degree(pa);
                for &(pb, cb) in tb {
                    if da + packed_degree(pb) > cap {
                        continue;
                    }
                    *out.terms.entry(pa + pb).or_default() += ca * cb;
                }
            }
        }
    }
    out.prune();
    out
}

/// Poisson bracket `{f, g}` in the pairs `(q1, p1)` and `(q2, p2)`.
pub fn poisson_bracket(f: &CanonicalPolynomial, g: &CanonicalPolynomial) -> CanonicalPolynomial {
    let trunc = f.trunc.min(g.trunc);
    let cap = f.degree_cap.min(g.degree_cap);
    let mut out = CanonicalPolynomial {
        terms: FxHashMap::default(),
        trunc,
        degree_cap: cap,
    };
    let gf = f.by_order();
    let gg = g.by_order();
    let gg: Vec<Vec<(u64, [i64; 4], Complex64)>> = gg
        .into_iter()
        .map(|v| v.into_iter().map(|(p, c)| (p, exps(p), c)).collect())
        .collect();
    for (sf, tf) in gf.iter().enumerate() {
        if sf as u32 > trunc {
            break;
        }
        for (sg, tg) in gg.iter().enumerate() {
            if (sf + sg) as u32 > trunc {
                break;
            }
            if tg.is_empty() {
                continue;
            }
            for &(pf, cf) in tf {
                let ef = exps(pf);
                let df = packed_degree(pf);
                for &(pg, ref eg, cg) in tg {
                    if df + packed_degree(pg) > cap + 2 {
                        continue;
                    }
                    let w1 = ef[0] * eg[1] - ef[1] * eg[0];
                    let w2 = ef[2] * eg[3] - ef[3] * eg[2];
                    if w1 == 0 && w2 == 0 {
                        continue;
                    }
                    let prod = cf * cg;
                    let sum = pf + pg;
                    if w1 != 0 {
                        *out.terms.entry(sum - Q1P1).or_default() += prod * w1 as f64;
                    }
                    if w2 != 0 {
                        *out.terms.entry(sum - Q2P2).or_default() += prod * w2 as f64;
                    }
                }
            }
        }
    }
    out.prune();
    out
}

/// `exp(±L_chi) f = sum_k (±1)^k / k! {..{f, chi}.., chi}`, summed until the
/// iterated bracket is truncated away.
pub fn lie_transform(
    f: &CanonicalPolynomial,
    chi: &CanonicalPolynomial,
    direction: Direction,
) -> Result<CanonicalPolynomial, PolyError> {
    if chi.is_empty() {
        return Ok(f.clone());
    }
    if chi.min_bk() == Some(0) {
        return Err(PolyError::NonNilpotentGenerator);
    }
    let sign = match direction {
        Direction::Forward => 1.0,
        Direction::Inverse => -1.0,
    };
    let mut result = f.clone();
    let mut term = f.clone();
    let mut k = 1.0;
    loop {
        term = poisson_bracket(&term, chi).scale(Complex64::new(sign / k, 0.0));
        if term.is_empty() {
            break;
        }
        result.add_assign_poly(&term);
        k += 1.0;
    }
    Ok(result)
}

impl Add for &CanonicalPolynomial {
    type Output = CanonicalPolynomial;
    fn add(self, rhs: Self) -> CanonicalPolynomial {
        add(self, rhs)
    }
}

impl Sub for &CanonicalPolynomial {
    type Output = CanonicalPolynomial;
    fn sub(self, rhs: Self) -> CanonicalPolynomial {
        sub(self, rhs)
    }
}

impl Mul for &CanonicalPolynomial {
    type Output = CanonicalPolynomial;
    fn mul(self, rhs: Self) -> CanonicalPolynomial {
        multiply(self, rhs)
    }
}

impl Neg for &CanonicalPolynomial {
    type Output = CanonicalPolynomial;
    fn neg(self) -> CanonicalPolynomial {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl fmt::Display for CanonicalPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.sorted_terms();
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6e}{:+.6e}i)", t.coeff.re, t.coeff.im)?;
            for (name, e) in [("q1", t.key.k1), ("p1", t.key.l1), ("q2", t.key.k2), ("p2", t.key.l2)] {
                match e {
                    0 => {}
                    1 => write!(f, "*{name}")?,
                    _ => write!(f, "*{name}^{e}")?,
                }
            }
            if t.bk_order > 0 {
                write!(f, "*λ^{}", t.bk_order)?;
            }
        }
        Ok(())
    }
}

/// Serialized form of one term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub k1: u32,
    pub l1: u32,
    pub k2: u32,
    pub l2: u32,
    pub re: f64,
    pub im: f64,
    pub bk: u32,
}

impl CanonicalPolynomial {
    /// Records sorted by key, ready for JSON output.
    pub fn to_records(&self) -> Vec<TermRecord> {
        self.sorted_terms()
            .into_iter()
            .map(|t| TermRecord {
                k1: t.key.k1,
                l1: t.key.l1,
                k2: t.key.k2,
                l2: t.key.l2,
                re: t.coeff.re,
                im: t.coeff.im,
                bk: t.bk_order,
            })
            .collect()
    }

    pub fn from_records(records: &[TermRecord], trunc: u32) -> Result<Self, PolyError> {
        let mut p = Self::zero(trunc);
        for r in records {
            let key = ExponentKey::new(r.k1, r.l1, r.k2, r.l2);
            if key.degree() > MAX_DEGREE {
                return Err(PolyError::DegreeOverflow {
                    degree: key.degree(),
                    cap: MAX_DEGREE,
                });
            }
            p.add_term(key, Complex64::new(r.re, r.im), r.bk);
        }
        p.prune();
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_records()).expect("records serialize")
    }

    pub fn from_json(text: &str, trunc: u32) -> Result<Self, PolyError> {
        let records: Vec<TermRecord> =
            serde_json::from_str(text).map_err(|e| PolyError::Json(e.to_string()))?;
        Self::from_records(&records, trunc)
    }
}
