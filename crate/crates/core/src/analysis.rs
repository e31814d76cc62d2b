//! Remainder norms, optimal-order scans, asymptotic fits and normal-form
//! estimates of bifurcation energies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::model::{Mode, PreparedHamiltonian};
use crate::normform::{equatorial_series, extract_omega2_squared, normalize_each, NormalizationState};

/// Power-law fit threshold and exponential-regime bound on `dE`.
pub const DEFAULT_FIT_THRESHOLD: f64 = 1e-3;
/// Number of samples used to bracket roots of the frequency condition.
const ROOT_SCAN_SAMPLES: usize = 4000;

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(n, &a)| n as f64 * a).collect()
}

/// How `omega_2^2` enters the transverse factor of the norm.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum MirrorFrequency {
    /// `omega_2^2(I1)` as a power series.
    Series(Vec<f64>),
    /// Fixed `omega_2*`.
    Fixed(f64),
}

/// Sums of `|G|` of the remainder of one normalization order, grouped by
/// `(s, k1 + l1, k2, l2)`. Evaluating the norm for many `(E, dE, beta)`
/// only needs this census.
#[derive(Clone, Debug)]
pub struct RemainderCensus {
    pub r: u32,
    pub r_trunc: u32,
    pub mode: Mode,
    pub omega1: f64,
    pub mirror: MirrorFrequency,
    groups: Vec<(u32, u32, u32, u32, f64)>,
}

impl RemainderCensus {
    pub fn from_state(state: &NormalizationState) -> Self {
        let mut acc: BTreeMap<(u32, u32, u32, u32), f64> = BTreeMap::new();
        for t in state.remainder().iter() {
            let k = t.key;
            *acc.entry((t.bk_order, k.k1 + k.l1, k.k2, k.l2)).or_default() += t.coeff.norm();
        }
        let (omega1, mirror) = match state.mode {
            Mode::Nonresonant => {
                let series = if state.step >= 1 {
                    extract_omega2_squared(state).unwrap_or_default()
                } else {
                    Vec::new()
                };
                (state.omega10, MirrorFrequency::Series(series))
            }
            Mode::Resonant(p) => (p.omega1, MirrorFrequency::Fixed(p.omega2)),
        };
        RemainderCensus {
            r: state.step,
            r_trunc: state.r_trunc,
            mode: state.mode,
            omega1,
            mirror,
            groups: acc.into_iter().map(|((s, a, k2, l2), g)| (s, a, k2, l2, g)).collect(),
        }
    }

    /// `||R^(r,N)||_{E, dE, beta}`.
    pub fn norm(&self, n: u32, energy: f64, delta_e: f64, beta: f64) -> Result<f64, AnalysisError> {
        if !(self.r < n && n <= self.r_trunc) {
            return Err(AnalysisError::Range(format!(
                "need r < N <= r_trunc, got r = {}, N = {}, r_trunc = {}",
                self.r, n, self.r_trunc
            )));
        }
        if !(delta_e >= 0.0 && delta_e < energy) {
            return Err(AnalysisError::Range(format!(
                "need 0 <= dE < E, got dE = {delta_e}, E = {energy}"
            )));
        }
        let action = (energy - delta_e) / self.omega1;
        let w2sq = match &self.mirror {
            MirrorFrequency::Series(c) => poly_eval(c, action),
            MirrorFrequency::Fixed(w) => w * w,
        };
        let radial = action;
        let transverse = 2.0 * delta_e / (1.0 + beta * beta * w2sq);
        let b = beta.abs();
        let mut sum = 0.0;
        for &(s, a, k2, l2, g) in &self.groups {
            if s > n {
                continue;
            }
            sum += g * radial.powf(a as f64 / 2.0) * b.powi(k2 as i32) * transverse.powf((k2 + l2) as f64 / 2.0);
        }
        Ok(sum)
    }
}

/// Remainder norm for the state's own normalization order `r`.
pub fn remainder_norm(
    state: &NormalizationState,
    r: u32,
    n: u32,
    energy: f64,
    delta_e: f64,
    beta: f64,
) -> Result<f64, AnalysisError> {
    if r != state.step {
        return Err(AnalysisError::Range(format!(
            "state holds order {}, norm requested for order {r}",
            state.step
        )));
    }
    RemainderCensus::from_state(state).norm(n, energy, delta_e, beta)
}

/// Runs one normalization up to `r_max` and keeps the remainder census of
/// every order `1..=r_max`.
pub fn remainder_censuses(
    prepared: &PreparedHamiltonian,
    r_max: u32,
    r_trunc: u32,
) -> Result<Vec<RemainderCensus>, AnalysisError> {
    let mut out = Vec::new();
    normalize_each(prepared, r_max, r_trunc, |s| {
        if s.step >= 1 {
            out.push(RemainderCensus::from_state(s));
        }
    })?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub mode: String,
    pub energy: f64,
    pub beta: f64,
    pub delta_e: f64,
    pub r: u32,
    pub n: u32,
    pub norm: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RemainderNormTable {
    pub rows: Vec<NormRow>,
}

impl RemainderNormTable {
    pub fn get(&self, delta_e: f64, r: u32, n: u32) -> Option<f64> {
        self.rows
            .iter()
            .find(|row| row.delta_e == delta_e && row.r == r && row.n == n)
            .map(|row| row.norm)
    }

    /// `r -> ||R^(r,N)||` at one `dE`.
    pub fn curve(&self, delta_e: f64, n: u32) -> Vec<(u32, f64)> {
        self.rows
            .iter()
            .filter(|row| row.delta_e == delta_e && row.n == n)
            .map(|row| (row.r, row.norm))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum AnalysisWarning {
    /// The minimum over `r` sits at the edge of the scanned orders.
    FlatMinimumWarning { delta_e: f64, r: u32 },
    /// More than one root of the frequency condition; the smallest is used.
    MultipleRootsWarning { roots: Vec<f64> },
    /// Fewer than two points inside a fit range.
    FitSkipped { fit: String, points: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalOrder {
    pub delta_e: f64,
    pub r_opt: u32,
    pub norm: f64,
}

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms: f64,
    pub points: usize,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    Some(LinearFit {
        slope,
        intercept,
        rms,
        points: n,
    })
}

/// `r_opt ~ C dE^(-alpha)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub prefactor: f64,
    pub range: (f64, f64),
    pub rms: f64,
    pub points: usize,
}

/// `|ln R_opt| = A (dE0 / dE)^d`, reported with `dE0` fixed (prefactor
/// `A`) and with `A = 1` (fitted `dE0`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub d: f64,
    pub delta_e0: f64,
    pub prefactor: f64,
    pub delta_e0_unit_prefactor: f64,
    pub range: (f64, f64),
    pub rms: f64,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Power law uses `dE <= power_law_max`.
    pub power_law_max: f64,
    /// Exponential law uses `dE <= exponential_max`.
    pub exponential_max: f64,
    /// Reference `dE0`.
    pub delta_e0: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            power_law_max: DEFAULT_FIT_THRESHOLD,
            exponential_max: DEFAULT_FIT_THRESHOLD,
            delta_e0: DEFAULT_FIT_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub r_opt: Vec<OptimalOrder>,
    pub power_law: Option<PowerLawFit>,
    pub exponential: Option<ExponentialFit>,
    pub warnings: Vec<AnalysisWarning>,
}

/// Logarithmic grid with `per_decade` points per decade, both ends included.
pub fn log_grid(lo: f64, hi: f64, per_decade: u32) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round() as usize;
    (0..=n)
        .map(|i| {
            let e = lo.log10() + decades * i as f64 / n.max(1) as f64;
            // snap to a short decimal so grid values print cleanly
            let v = 10f64.powf(e);
            format!("{v:.6e}").parse().unwrap()
        })
        .collect()
}

/// Norm table over `(dE, r, N)` plus `r_opt(dE)` at `N = n_max` and the two
/// asymptotic fits.
pub fn optimal_order_scan(
    censuses: &[RemainderCensus],
    energy: f64,
    beta: f64,
    delta_es: &[f64],
    n_max: u32,
    config: &FitConfig,
) -> Result<(RemainderNormTable, AsymptoticFit), AnalysisError> {
    if censuses.is_empty() {
        return Err(AnalysisError::Range("no normalization orders to scan".into()));
    }
    let mode = match censuses[0].mode {
        Mode::Nonresonant => "nonres",
        Mode::Resonant(_) => "res",
    };
    let r_lo = censuses.iter().map(|c| c.r).min().unwrap();
    let r_hi = censuses.iter().map(|c| c.r).max().unwrap();
    let mut table = RemainderNormTable::default();
    let mut fit = AsymptoticFit::default();
    for &de in delta_es {
        let mut best: Option<(u32, f64)> = None;
        for c in censuses {
            if c.r >= n_max {
                continue;
            }
            for n in c.r + 1..=n_max {
                let norm = c.norm(n, energy, de, beta)?;
                table.rows.push(NormRow {
                    mode: mode.into(),
                    energy,
                    beta,
                    delta_e: de,
                    r: c.r,
                    n,
                    norm,
                });
                if n == n_max && best.is_none_or(|(_, b)| norm < b) {
                    best = Some((c.r, norm));
                }
            }
        }
        if let Some((r, norm)) = best {
            let top = r_hi.min(n_max - 1);
            if r == top || (r == r_lo && r_lo > 1) {
                log::warn!("FlatMinimumWarning: minimum at the scan edge r = {r} for dE = {de}");
                fit.warnings.push(AnalysisWarning::FlatMinimumWarning { delta_e: de, r });
            }
            fit.r_opt.push(OptimalOrder {
                delta_e: de,
                r_opt: r,
                norm,
            });
        }
    }

    let pick = |max: f64| -> Vec<OptimalOrder> {
        fit.r_opt.iter().copied().filter(|o| o.delta_e <= max).collect()
    };
    let range = |pts: &[OptimalOrder]| {
        let lo = pts.iter().map(|o| o.delta_e).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|o| o.delta_e).fold(0.0, f64::max);
        (lo, hi)
    };

    let pts = pick(config.power_law_max);
    let x: Vec<f64> = pts.iter().map(|o| o.delta_e.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|o| (o.r_opt as f64).ln()).collect();
    match fit_line(&x, &y) {
        Some(l) => {
            fit.power_law = Some(PowerLawFit {
                alpha: -l.slope,
                prefactor: l.intercept.exp(),
                range: range(&pts),
                rms: l.rms,
                points: l.points,
            })
        }
        None => fit.warnings.push(AnalysisWarning::FitSkipped {
            fit: "power_law".into(),
            points: pts.len(),
        }),
    }

    let pts: Vec<OptimalOrder> = pick(config.exponential_max)
        .into_iter()
        .filter(|o| o.norm > 0.0 && o.norm < 1.0)
        .collect();
    let x: Vec<f64> = pts.iter().map(|o| o.delta_e.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|o| o.norm.ln().abs().ln()).collect();
    match fit_line(&x, &y) {
        Some(l) => {
            let d = -l.slope;
            fit.exponential = Some(ExponentialFit {
                d,
                delta_e0: config.delta_e0,
                prefactor: (l.intercept - d * config.delta_e0.ln()).exp(),
                delta_e0_unit_prefactor: (l.intercept / d).exp(),
                range: range(&pts),
                rms: l.rms,
                points: l.points,
            })
        }
        None => fit.warnings.push(AnalysisWarning::FitSkipped {
            fit: "exponential".into(),
            points: pts.len(),
        }),
    }
    Ok((table, fit))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BifurcationEstimate {
    pub m1: u32,
    pub m2: u32,
    pub order: u32,
    pub action: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub energy: f64,
    pub warnings: Vec<AnalysisWarning>,
}

/// Frequencies of the equatorial orbit family from a nonresonant normal
/// form: `Z(I1)`, `omega_1,eq(I1) = dZ/dI1` and `omega_2^2(I1)`.
#[derive(Clone, Debug)]
pub struct EquatorialFrequencies {
    pub energy: Vec<f64>,
    pub omega1: Vec<f64>,
    pub omega2_squared: Vec<f64>,
}

impl EquatorialFrequencies {
    pub fn from_state(state: &NormalizationState) -> Result<Self, AnalysisError> {
        if !matches!(state.mode, Mode::Nonresonant) {
            return Err(AnalysisError::Mode("bifurcation energies need the nonresonant normal form".into()));
        }
        if state.step < 2 {
            return Err(AnalysisError::Range("bifurcation energies need r >= 2".into()));
        }
        let energy = equatorial_series(state)?;
        Ok(EquatorialFrequencies {
            omega1: poly_deriv(&energy),
            omega2_squared: extract_omega2_squared(state)?,
            energy,
        })
    }

    pub fn energy_at(&self, action: f64) -> f64 {
        poly_eval(&self.energy, action)
    }

    pub fn omega1_at(&self, action: f64) -> f64 {
        poly_eval(&self.omega1, action)
    }

    pub fn omega2_at(&self, action: f64) -> f64 {
        poly_eval(&self.omega2_squared, action).max(0.0).sqrt()
    }

    /// Largest action up to which the family is followed: where `Z` reaches
    /// `e_max` or stops increasing.
    pub fn action_limit(&self, e_max: f64) -> f64 {
        let hi = 4.0 * e_max / self.omega1_at(0.0).max(1e-12);
        let step = hi / ROOT_SCAN_SAMPLES as f64;
        let mut last = 0.0;
        for i in 1..=ROOT_SCAN_SAMPLES {
            let a = i as f64 * step;
            if self.energy_at(a) >= e_max || self.omega1_at(a) <= 0.0 {
                // refine the crossing of Z = e_max or omega1 = 0
                let (mut lo, mut up) = (last, a);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + up);
                    if self.energy_at(mid) >= e_max || self.omega1_at(mid) <= 0.0 {
                        up = mid;
                    } else {
                        lo = mid;
                    }
                }
                return lo;
            }
            last = a;
        }
        hi
    }
}

/// Solves `m2 omega_1,eq(I1) = m1 omega_2(I1)` on `[0, I_max]`.
pub fn bifurcation_energy(state: &NormalizationState, m1: u32, m2: u32) -> Result<BifurcationEstimate, AnalysisError> {
    if m1 == 0 || m2 == 0 {
        return Err(AnalysisError::Range("resonance integers must be positive".into()));
    }
    let freq = EquatorialFrequencies::from_state(state)?;
    let e_max = if state.critical_energy.is_finite() {
        state.critical_energy
    } else {
        1.0
    };
    let i_max = freq.action_limit(e_max);
    let f = |a: f64| m2 as f64 * freq.omega1_at(a) - m1 as f64 * freq.omega2_at(a);
    let mut roots = Vec::new();
    let step = i_max / ROOT_SCAN_SAMPLES as f64;
    let mut prev = (0.0, f(0.0));
    for i in 1..=ROOT_SCAN_SAMPLES {
        let a = i as f64 * step;
        let fa = f(a);
        if prev.1 > 0.0 && fa <= 0.0 || prev.1 < 0.0 && fa >= 0.0 {
            let (mut lo, mut hi) = (prev.0, a);
            let flo = prev.1;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if (f(mid) > 0.0) == (flo > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev = (a, fa);
    }
    let Some(&action) = roots.first() else {
        return Err(AnalysisError::NoRoot { m1, m2, i_max });
    };
    let mut warnings = Vec::new();
    if roots.len() > 1 {
        log::warn!("MultipleRootsWarning: {roots:?}, using the smallest");
        warnings.push(AnalysisWarning::MultipleRootsWarning { roots });
    }
    Ok(BifurcationEstimate {
        m1,
        m2,
        order: state.step,
        action,
        omega1: freq.omega1_at(action),
        omega2: freq.omega2_at(action),
        energy: freq.energy_at(action),
        warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub order: u32,
    pub energy: Option<f64>,
    pub error: Option<f64>,
}

/// `E_t(r)` from the 1:1 condition for each requested order, compared with
/// a reference threshold.
pub fn chaos_threshold_convergence(
    prepared: &PreparedHamiltonian,
    orders: &[u32],
    reference: f64,
) -> Result<Vec<ThresholdRow>, AnalysisError> {
    let r_max = orders.iter().copied().max().unwrap_or(0);
    let mut rows = Vec::new();
    let mut failure = None;
    normalize_each(prepared, r_max, r_max.max(1), |s| {
        if orders.contains(&s.step) && failure.is_none() {
            match bifurcation_energy(s, 1, 1) {
                Ok(b) => rows.push(ThresholdRow {
                    order: s.step,
                    energy: Some(b.energy),
                    error: Some(b.energy - reference),
                }),
                Err(AnalysisError::NoRoot { .. }) => rows.push(ThresholdRow {
                    order: s.step,
                    energy: None,
                    error: None,
                }),
                Err(e) => failure = Some(e),
            }
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(rows),
    }
}
