//! Formal integrals in the original variables and their restriction to the
//! surface of section `rho = 0`, `p_rho > 0`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::section_momentum;
use crate::error::InvariantError;
use crate::model::{inverse_linear, Mode, PotentialSpec};
use crate::normform::NormalizationState;
use crate::poly::{lie_transform, multiply, CanonicalPolynomial, Direction, ExponentKey, MAX_DEGREE};

/// Imaginary residue allowed on a back-transformed coefficient, relative to
/// `max(1, sum of |contributions|)`.
pub const IMAG_TOL: f64 = 1e-11;
pub const DEFAULT_GRID: usize = 400;
/// Half-width of the default `z` window; the allowed strip on the section
/// is unbounded in `z` for potentials vanishing on the axis.
pub const DEFAULT_Z_HALF_WIDTH: f64 = 1.5;

/// Real polynomial in `(rho, p_rho, z, p_z)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RealPolynomial {
    pub terms: BTreeMap<[u32; 4], f64>,
}

impl RealPolynomial {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: [u32; 4]) -> f64 {
        self.terms.get(&e).copied().unwrap_or(0.0)
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    fn powers(x: [f64; 4], d: u32) -> [Vec<f64>; 4] {
        std::array::from_fn(|i| {
            let mut v = Vec::with_capacity(d as usize + 1);
            let mut acc = 1.0;
            for _ in 0..=d {
                v.push(acc);
                acc *= x[i];
            }
            v
        })
    }

    pub fn eval(&self, x: [f64; 4]) -> f64 {
        let pw = Self::powers(x, self.max_degree());
        self.terms
            .iter()
            .map(|(e, c)| c * pw[0][e[0] as usize] * pw[1][e[1] as usize] * pw[2][e[2] as usize] * pw[3][e[3] as usize])
            .sum()
    }

    pub fn gradient(&self, x: [f64; 4]) -> [f64; 4] {
        let pw = Self::powers(x, self.max_degree());
        let mut g = [0.0; 4];
        for (e, c) in &self.terms {
            for (v, gv) in g.iter_mut().enumerate() {
                if e[v] == 0 {
                    continue;
                }
                let mut t = c * e[v] as f64;
                for (w, pww) in pw.iter().enumerate() {
                    let k = if w == v { e[w] - 1 } else { e[w] };
                    t *= pww[k as usize];
                }
                *gv += t;
            }
        }
        g
    }

    /// True when every monomial has even total degree.
    pub fn is_even(&self) -> bool {
        self.terms.keys().all(|e| e.iter().sum::<u32>() % 2 == 0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FormalIntegral {
    pub mode: Mode,
    pub order: u32,
    /// Integral in the complex normalizing variables, graded by order.
    #[serde(skip, default = "empty_polynomial")]
    pub complex: CanonicalPolynomial,
    pub real: RealPolynomial,
    /// Largest relative imaginary residue met (and dropped) during substitution.
    pub max_imag_residue: f64,
}

fn empty_polynomial() -> CanonicalPolynomial {
    CanonicalPolynomial::zero(0)
}

impl FormalIntegral {
    pub fn eval(&self, rho: f64, p_rho: f64, z: f64, p_z: f64) -> f64 {
        self.real.eval([rho, p_rho, z, p_z])
    }
}

/// The conserved quantity of the normal form: `i q1 p1`, or
/// `i (m1 q1 p1 + m2 q2 p2)` in resonant mode.
pub fn normal_form_integral(mode: &Mode, trunc: u32) -> CanonicalPolynomial {
    let mut i0 = CanonicalPolynomial::zero(trunc);
    match mode {
        Mode::Nonresonant => i0.add_term(ExponentKey::new(1, 1, 0, 0), Complex64::new(0.0, 1.0), 0),
        Mode::Resonant(p) => {
            i0.add_term(ExponentKey::new(1, 1, 0, 0), Complex64::new(0.0, p.m1 as f64), 0);
            i0.add_term(ExponentKey::new(0, 0, 1, 1), Complex64::new(0.0, p.m2 as f64), 0);
        }
    }
    i0
}

/// `exp(-L_chi_1) ... exp(-L_chi_r)` applied to the normal-form integral,
/// truncated at order `r`.
pub fn back_transform_complex(state: &NormalizationState) -> Result<CanonicalPolynomial, InvariantError> {
    let r = state.step;
    let mut phi = normal_form_integral(&state.mode, r);
    for chi in state.generators.iter().rev() {
        phi = lie_transform(&phi, &chi.with_trunc(r), Direction::Inverse)?;
    }
    Ok(phi)
}

fn unit_monomial(key: ExponentKey) -> CanonicalPolynomial {
    let mut p = CanonicalPolynomial::zero_with_cap(0, MAX_DEGREE);
    p.add_term(key, Complex64::new(1.0, 0.0), 0);
    p
}

fn power_cache(base: &CanonicalPolynomial, n: u32, cache: &mut Vec<CanonicalPolynomial>) {
    if cache.is_empty() {
        cache.push(unit_monomial(ExponentKey::default()));
    }
    while cache.len() <= n as usize {
        let next = multiply(cache.last().unwrap(), base);
        cache.push(next);
    }
}

fn real_slot(slot: usize) -> CanonicalPolynomial {
    let mut e = [0u32; 4];
    e[slot] = 1;
    unit_monomial(ExponentKey::new(e[0], e[1], e[2], e[3]))
}

/// Rewrites a polynomial in the complex variables as a real polynomial in
/// `(rho, p_rho, z, p_z)`, all orders summed.
pub fn to_real_variables(
    phi: &CanonicalPolynomial,
    omega10: f64,
    mode: &Mode,
) -> Result<(RealPolynomial, f64), InvariantError> {
    let (q1, p1) = inverse_linear(omega10, 0);
    let (q2, p2) = match mode {
        Mode::Nonresonant => (real_slot(2), real_slot(3)),
        Mode::Resonant(p) => inverse_linear(p.omega2, 2),
    };
    let bases = [q1, p1, q2, p2];
    let mut caches: [Vec<CanonicalPolynomial>; 4] = Default::default();
    // coefficient and the summed magnitude of its contributions
    let mut acc: BTreeMap<[u32; 4], (Complex64, f64)> = BTreeMap::new();
    for t in phi.iter() {
        let e = [t.key.k1, t.key.l1, t.key.k2, t.key.l2];
        let mut prod: Option<CanonicalPolynomial> = None;
        for v in 0..4 {
            if e[v] == 0 {
                continue;
            }
            power_cache(&bases[v], e[v], &mut caches[v]);
            let f = &caches[v][e[v] as usize];
            prod = Some(match prod {
                None => f.clone(),
                Some(p) => multiply(&p, f),
            });
        }
        match prod {
            None => {
                let a = acc.entry([0; 4]).or_default();
                a.0 += t.coeff;
                a.1 += t.coeff.norm();
            }
            Some(p) => {
                for u in p.iter() {
                    let a = acc.entry([u.key.k1, u.key.l1, u.key.k2, u.key.l2]).or_default();
                    let c = t.coeff * u.coeff;
                    a.0 += c;
                    a.1 += c.norm();
                }
            }
        }
    }
    let mut real = RealPolynomial::default();
    let mut worst: f64 = 0.0;
    for (e, (c, scale)) in acc {
        let rel = c.im.abs() / scale.max(1.0);
        if rel >= IMAG_TOL {
            return Err(InvariantError::NonRealIntegral {
                key: ExponentKey::new(e[0], e[1], e[2], e[3]),
                imag: c.im,
            });
        }
        worst = worst.max(rel);
        if c.re.abs() > 1e-15 * scale {
            real.terms.insert(e, c.re);
        }
    }
    Ok((real, worst))
}

/// Formal integral after `state.step` normalization steps, in the original
/// variables.
pub fn back_transform(state: &NormalizationState) -> Result<FormalIntegral, InvariantError> {
    let complex = back_transform_complex(state)?;
    let (real, residue) = to_real_variables(&complex, state.omega10, &state.mode)?;
    Ok(FormalIntegral {
        mode: state.mode,
        order: state.step,
        complex,
        real,
        max_imag_residue: residue,
    })
}

/// The integral restricted to the section at energy `E`.
#[derive(Clone, Copy)]
pub struct SectionFunction<'a> {
    pub integral: &'a FormalIntegral,
    pub potential: &'a PotentialSpec,
    pub energy: f64,
}

impl SectionFunction<'_> {
    pub fn value(&self, z: f64, p_z: f64) -> Option<f64> {
        let p_rho = section_momentum(self.potential, self.energy, z, p_z)?;
        Some(self.integral.eval(0.0, p_rho, z, p_z))
    }

    /// `(dPhi/dz, dPhi/dp_z)` along the section, `p_rho` eliminated through
    /// the energy. `None` outside the allowed region or on its boundary.
    pub fn gradient(&self, z: f64, p_z: f64) -> Option<[f64; 2]> {
        let p_rho = section_momentum(self.potential, self.energy, z, p_z)?;
        if p_rho == 0.0 {
            return None;
        }
        let g = self.integral.real.gradient([0.0, p_rho, z, p_z]);
        let (_, vz) = self.potential.gradient(0.0, z);
        Some([g[2] - g[1] * vz / p_rho, g[3] - g[1] * p_z / p_rho])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionGrid {
    pub z_min: f64,
    pub z_max: f64,
    pub pz_min: f64,
    pub pz_max: f64,
    pub nz: usize,
    pub npz: usize,
}

impl SectionGrid {
    /// `z` in `[-1.5, 1.5]` and `p_z` over the full allowed range at `z=0`.
    pub fn default_for(potential: &PotentialSpec, energy: f64) -> Self {
        let pz = (2.0 * (energy - potential.value(0.0, 0.0))).max(0.0).sqrt();
        SectionGrid {
            z_min: -DEFAULT_Z_HALF_WIDTH,
            z_max: DEFAULT_Z_HALF_WIDTH,
            pz_min: -pz,
            pz_max: pz,
            nz: DEFAULT_GRID,
            npz: DEFAULT_GRID,
        }
    }

    pub fn z(&self, i: usize) -> f64 {
        self.z_min + (self.z_max - self.z_min) * i as f64 / (self.nz.max(2) - 1) as f64
    }

    pub fn pz(&self, j: usize) -> f64 {
        self.pz_min + (self.pz_max - self.pz_min) * j as f64 / (self.npz.max(2) - 1) as f64
    }
}

/// `Phi_sect` sampled on a grid, row-major in `z` (index `i * npz + j`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectionField {
    pub energy: f64,
    pub grid: SectionGrid,
    pub values: Vec<Option<f64>>,
}

impl SectionField {
    pub fn sample(f: &SectionFunction<'_>, grid: SectionGrid) -> Self {
        let mut values = Vec::with_capacity(grid.nz * grid.npz);
        for i in 0..grid.nz {
            for j in 0..grid.npz {
                values.push(f.value(grid.z(i), grid.pz(j)));
            }
        }
        SectionField {
            energy: f.energy,
            grid,
            values,
        }
    }

    /// [`SectionField::sample`] with the `z` rows split over `threads` workers.
    pub fn sample_threads(f: &SectionFunction<'_>, grid: SectionGrid, threads: usize) -> Self {
        let threads = threads.clamp(1, grid.nz.max(1));
        if threads == 1 {
            return Self::sample(f, grid);
        }
        let rows = grid.nz.div_ceil(threads);
        let parts: Vec<Vec<Option<f64>>> = std::thread::scope(|sc| {
            let handles: Vec<_> = (0..threads)
                .map(|k| {
                    sc.spawn(move || {
                        let mut out = Vec::new();
                        for i in k * rows..((k + 1) * rows).min(grid.nz) {
                            for j in 0..grid.npz {
                                out.push(f.value(grid.z(i), grid.pz(j)));
                            }
                        }
                        out
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("grid worker panicked")).collect()
        });
        SectionField {
            energy: f.energy,
            grid,
            values: parts.concat(),
        }
    }

    pub fn at(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.grid.npz + j]
    }

    /// `(z, p_z, phi, valid)` rows.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64, bool)> + '_ {
        (0..self.grid.nz).flat_map(move |i| {
            (0..self.grid.npz).map(move |j| {
                let v = self.at(i, j);
                (self.grid.z(i), self.grid.pz(j), v.unwrap_or(f64::NAN), v.is_some())
            })
        })
    }

    fn interior(&self, i: usize, j: usize, margin: usize) -> bool {
        let (nz, np) = (self.grid.nz as isize, self.grid.npz as isize);
        let m = margin as isize;
        for di in -m..=m {
            for dj in -m..=m {
                let (a, b) = (i as isize + di, j as isize + dj);
                if a < 0 || b < 0 || a >= nz || b >= np || self.at(a as usize, b as usize).is_none() {
                    return false;
                }
            }
        }
        true
    }

    /// Local extrema over the 8-neighbourhood, away from invalid cells by
    /// `margin` grid steps. Ties are allowed; adjacent cells of the same
    /// kind are merged into one extremum at their mean position, so a
    /// centre falling between grid lines is reported once.
    pub fn local_extrema(&self, margin: usize) -> Vec<Extremum> {
        let (nz, np) = (self.grid.nz, self.grid.npz);
        // 1 = maximum, -1 = minimum
        let mut kind = vec![0i8; nz * np];
        for i in 1..nz.saturating_sub(1) {
            for j in 1..np.saturating_sub(1) {
                if !self.interior(i, j, margin.max(1)) {
                    continue;
                }
                let c = self.at(i, j).unwrap();
                let (mut ge, mut le, mut flat) = (true, true, true);
                for di in [-1isize, 0, 1] {
                    for dj in [-1isize, 0, 1] {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let v = self.at((i as isize + di) as usize, (j as isize + dj) as usize).unwrap();
                        ge &= c >= v;
                        le &= c <= v;
                        flat &= c == v;
                    }
                }
                if !flat {
                    kind[i * np + j] = if ge { 1 } else if le { -1 } else { 0 };
                }
            }
        }
        let mut out = Vec::new();
        let mut seen = vec![false; nz * np];
        for start in 0..nz * np {
            if kind[start] == 0 || seen[start] {
                continue;
            }
            let k = kind[start];
            seen[start] = true;
            let mut stack = vec![start];
            let (mut sz, mut sp, mut sv, mut n) = (0.0, 0.0, 0.0, 0.0);
            while let Some(c) = stack.pop() {
                let (i, j) = (c / np, c % np);
                sz += self.grid.z(i);
                sp += self.grid.pz(j);
                sv += self.at(i, j).unwrap();
                n += 1.0;
                for di in [-1isize, 0, 1] {
                    for dj in [-1isize, 0, 1] {
                        let (a, b) = (i as isize + di, j as isize + dj);
                        if a < 0 || b < 0 || a >= nz as isize || b >= np as isize {
                            continue;
                        }
                        let d = a as usize * np + b as usize;
                        if !seen[d] && kind[d] == k {
                            seen[d] = true;
                            stack.push(d);
                        }
                    }
                }
            }
            out.push(Extremum {
                z: sz / n,
                p_z: sp / n,
                value: sv / n,
                maximum: k > 0,
            });
        }
        out
    }

    /// Connected components (4-neighbour) of `{phi > level}` (or `<` when
    /// `above` is false) that stay clear of invalid cells and the grid edge.
    pub fn enclosed_components(&self, level: f64, above: bool) -> Vec<Vec<(usize, usize)>> {
        let (nz, np) = (self.grid.nz, self.grid.npz);
        let inside = |i: usize, j: usize| {
            self.at(i, j)
                .map(|v| if above { v > level } else { v < level })
                .unwrap_or(false)
        };
        let mut seen = vec![false; nz * np];
        let mut comps = Vec::new();
        for i0 in 0..nz {
            for j0 in 0..np {
                if seen[i0 * np + j0] || !inside(i0, j0) {
                    continue;
                }
                let mut stack = vec![(i0, j0)];
                seen[i0 * np + j0] = true;
                let mut cells = Vec::new();
                let mut open = false;
                while let Some((i, j)) = stack.pop() {
                    cells.push((i, j));
                    if i == 0 || j == 0 || i + 1 == nz || j + 1 == np {
                        open = true;
                    }
                    let nbrs = [
                        (i.wrapping_sub(1), j),
                        (i + 1, j),
                        (i, j.wrapping_sub(1)),
                        (i, j + 1),
                    ];
                    for (a, b) in nbrs {
                        if a >= nz || b >= np {
                            continue;
                        }
                        if self.at(a, b).is_none() {
                            open = true;
                            continue;
                        }
                        if !seen[a * np + b] && inside(a, b) {
                            seen[a * np + b] = true;
                            stack.push((a, b));
                        }
                    }
                }
                if !open {
                    comps.push(cells);
                }
            }
        }
        comps
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub z: f64,
    pub p_z: f64,
    pub value: f64,
    pub maximum: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedLevel {
    pub seed: (f64, f64),
    pub level: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectionLevels {
    pub field: SectionField,
    pub levels: Vec<SeedLevel>,
}

/// Grid values of `Phi_sect` and the level `I_ct` through every seed.
pub fn section_levels(
    integral: &FormalIntegral,
    potential: &PotentialSpec,
    energy: f64,
    grid: SectionGrid,
    seeds: &[(f64, f64)],
) -> Result<SectionLevels, InvariantError> {
    section_levels_threads(integral, potential, energy, grid, seeds, 1)
}

/// [`section_levels`] with the grid sampled on `threads` workers.
pub fn section_levels_threads(
    integral: &FormalIntegral,
    potential: &PotentialSpec,
    energy: f64,
    grid: SectionGrid,
    seeds: &[(f64, f64)],
    threads: usize,
) -> Result<SectionLevels, InvariantError> {
    if !(energy > 0.0) {
        return Err(InvariantError::InvalidRequest(format!("energy {energy} must be positive")));
    }
    let f = SectionFunction {
        integral,
        potential,
        energy,
    };
    let levels = seeds
        .iter()
        .map(|&(z, pz)| {
            f.value(z, pz)
                .map(|level| SeedLevel { seed: (z, pz), level })
                .ok_or(InvariantError::SeedOutsideCzv { z, pz, energy })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SectionLevels {
        field: SectionField::sample_threads(&f, grid, threads),
        levels,
    })
}

/// Island centres of the section portrait: local extrema of `Phi_sect`
/// other than the central fixed point, at least `margin` cells from the
/// border of the allowed region. Extrema with `Phi_sect <= 0` are dropped:
/// the integral is a positive combination of actions wherever the series
/// represents the motion.
pub fn island_centers(field: &SectionField, margin: usize) -> Vec<Extremum> {
    let dz = (field.grid.z_max - field.grid.z_min) / (field.grid.nz.max(2) - 1) as f64;
    let dp = (field.grid.pz_max - field.grid.pz_min) / (field.grid.npz.max(2) - 1) as f64;
    field
        .local_extrema(margin)
        .into_iter()
        .filter(|e| e.value > 0.0)
        .filter(|e| e.z.abs() > 1.5 * dz || e.p_z.abs() > 1.5 * dp)
        .collect()
}

/// Number of islands cut out by the level through `level`: connected
/// components of the region on the far side of the level from the central
/// fixed point that close inside the allowed region and do not contain it.
pub fn count_islands(field: &SectionField, level: f64) -> usize {
    let g = &field.grid;
    let nearest = |lo: f64, hi: f64, n: usize, x: f64| {
        (((x - lo) / (hi - lo) * (n.max(2) - 1) as f64).round().max(0.0) as usize).min(n - 1)
    };
    let ci = nearest(g.z_min, g.z_max, g.nz, 0.0);
    let cj = nearest(g.pz_min, g.pz_max, g.npz, 0.0);
    let Some(centre) = field.at(ci, cj) else {
        return 0;
    };
    let above = centre < level;
    let radius = 1usize;
    field
        .enclosed_components(level, above)
        .into_iter()
        .filter(|c| !c.iter().any(|&(i, j)| i.abs_diff(ci) <= radius && j.abs_diff(cj) <= radius))
        .count()
}

/// Root-mean-square of `|Phi_sect - level| / |grad Phi_sect|` over points
/// of a numerical orbit; points on the section border are skipped.
pub fn level_distance_rms(f: &SectionFunction<'_>, level: f64, points: &[(f64, f64)]) -> Option<f64> {
    let mut acc = 0.0;
    let mut n = 0usize;
    for &(z, pz) in points {
        if let (Some(v), Some(g)) = (f.value(z, pz), f.gradient(z, pz)) {
            let gn = g[0].hypot(g[1]);
            if gn > 0.0 {
                acc += ((v - level) / gn).powi(2);
                n += 1;
            }
        }
    }
    (n > 0).then(|| (acc / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_builtin_model, complexify_nonresonant};
    use crate::normform::normalize;

    #[test]
    fn real_polynomial_gradient_matches_differences() {
        let mut p = RealPolynomial::default();
        p.terms.insert([2, 0, 1, 0], 1.5);
        p.terms.insert([0, 3, 0, 1], -0.25);
        p.terms.insert([1, 1, 1, 1], 2.0);
        let x = [0.3, -0.7, 0.4, 1.1];
        let g = p.gradient(x);
        for v in 0..4 {
            let (mut a, mut b) = (x, x);
            a[v] += 1e-6;
            b[v] -= 1e-6;
            let fd = (p.eval(a) - p.eval(b)) / 2e-6;
            assert!((fd - g[v]).abs() < 1e-8, "{v}: {fd} vs {}", g[v]);
        }
    }

    #[test]
    fn order_zero_integral_is_gyration_energy() {
        let v = build_builtin_model();
        let st = normalize(&complexify_nonresonant(&v, 4).unwrap(), 0, 4).unwrap();
        let phi = back_transform(&st).unwrap();
        assert_eq!(phi.real.len(), 2);
        assert!((phi.real.coeff([2, 0, 0, 0]) - 0.5).abs() < 1e-15);
        assert!((phi.real.coeff([0, 2, 0, 0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn section_gradient_matches_differences() {
        let v = build_builtin_model();
        let st = normalize(&complexify_nonresonant(&v, 3).unwrap(), 3, 3).unwrap();
        let phi = back_transform(&st).unwrap();
        let f = SectionFunction {
            integral: &phi,
            potential: &v,
            energy: 0.1,
        };
        let (z, pz) = (0.3, 0.1);
        let g = f.gradient(z, pz).unwrap();
        let h = 1e-6;
        let dz = (f.value(z + h, pz).unwrap() - f.value(z - h, pz).unwrap()) / (2.0 * h);
        let dp = (f.value(z, pz + h).unwrap() - f.value(z, pz - h).unwrap()) / (2.0 * h);
        assert!((g[0] - dz).abs() < 1e-7 && (g[1] - dp).abs() < 1e-7);
    }

    #[test]
    fn components_of_a_bump_pair() {
        let grid = SectionGrid {
            z_min: -1.0,
            z_max: 1.0,
            pz_min: -1.0,
            pz_max: 1.0,
            nz: 41,
            npz: 41,
        };
        let mut values = Vec::new();
        for i in 0..41 {
            for j in 0..41 {
                let (z, p) = (grid.z(i), grid.pz(j));
                let b = |c: f64| (-((z - c).powi(2) + p * p) * 20.0).exp();
                values.push(Some(b(0.5) + b(-0.5)));
            }
        }
        let field = SectionField {
            energy: 1.0,
            grid,
            values,
        };
        assert_eq!(field.enclosed_components(0.5, true).len(), 2);
        assert_eq!(island_centers(&field, 1).len(), 2);
    }
}
