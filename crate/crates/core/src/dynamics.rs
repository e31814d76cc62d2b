//! Orbits in the meridian plane, surfaces of section and linear stability
//! of the equatorial periodic orbit.

use serde::{Deserialize, Serialize};

use crate::error::DynamicsError;
use crate::integrator::{DenseSegment, Dop853, IntegratorError, OdeSystem, StepControl, Tolerances};
use crate::model::PotentialSpec;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const ESCAPE_BOUND: f64 = 20.0;
pub const CROSSING_TOL: f64 = 1e-12;

impl From<IntegratorError> for DynamicsError {
    fn from(e: IntegratorError) -> Self {
        match e {
            IntegratorError::StepSizeUnderflow(t) | IntegratorError::NonFinite(t) => DynamicsError::StepSizeUnderflow(t),
            IntegratorError::TooManySteps(t) => DynamicsError::TooManySteps(t),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitState {
    pub t: f64,
    pub rho: f64,
    pub z: f64,
    pub p_rho: f64,
    pub p_z: f64,
}

impl OrbitState {
    pub fn new(rho: f64, z: f64, p_rho: f64, p_z: f64) -> Self {
        OrbitState {
            t: 0.0,
            rho,
            z,
            p_rho,
            p_z,
        }
    }

    fn vector(&self) -> [f64; 4] {
        [self.rho, self.z, self.p_rho, self.p_z]
    }

    fn from_vector(t: f64, y: &[f64; 4]) -> Self {
        OrbitState {
            t,
            rho: y[0],
            z: y[1],
            p_rho: y[2],
            p_z: y[3],
        }
    }

    pub fn energy(&self, v: &PotentialSpec) -> f64 {
        v.energy(self.rho, self.z, self.p_rho, self.p_z)
    }
}

/// Equations of motion `(rho, z, p_rho, p_z)`.
pub struct MeridianFlow<'a> {
    pub potential: &'a PotentialSpec,
}

impl OdeSystem<4> for MeridianFlow<'_> {
    fn rhs(&self, _t: f64, y: &[f64; 4], dy: &mut [f64; 4]) {
        let (vr, vz) = self.potential.gradient(y[0], y[1]);
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = -vr;
        dy[3] = -vz;
    }
}

/// Equatorial motion `(rho, p_rho)` with the transverse variational
/// equations for `(dz, dp_z)`, two columns stored as `(a, c)` and `(b, d)`.
struct EquatorialVariational<'a> {
    potential: &'a PotentialSpec,
}

impl OdeSystem<6> for EquatorialVariational<'_> {
    fn rhs(&self, _t: f64, y: &[f64; 6], dy: &mut [f64; 6]) {
        let (vr, _) = self.potential.gradient(y[0], 0.0);
        let (_, _, vzz) = self.potential.hessian(y[0], 0.0);
        dy[0] = y[1];
        dy[1] = -vr;
        dy[2] = y[3];
        dy[3] = -vzz * y[2];
        dy[4] = y[5];
        dy[5] = -vzz * y[4];
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<OrbitState>,
    /// `max |H(t) - H(0)| / |H(0)|` over the accepted steps.
    pub max_energy_drift: f64,
}

fn check_escape(t: f64, y: &[f64; 4], bound: f64) -> Result<(), DynamicsError> {
    if y[0].abs() > bound || y[1].abs() > bound || !y.iter().all(|v| v.is_finite()) {
        return Err(DynamicsError::EscapeDetected { t, bound });
    }
    Ok(())
}

fn relative_drift(e: f64, e0: f64) -> f64 {
    (e - e0).abs() / e0.abs().max(f64::MIN_POSITIVE)
}

/// Adaptive integration over `[0, t_end]`. Samples are the accepted step
/// points; when `sample_dt` is given, uniformly spaced samples taken from
/// the dense output are returned instead.
pub fn integrate(
    potential: &PotentialSpec,
    initial: OrbitState,
    t_end: f64,
    tol: f64,
    sample_dt: Option<f64>,
) -> Result<Trajectory, DynamicsError> {
    let flow = MeridianFlow { potential };
    let e0 = initial.energy(potential);
    let mut st = Dop853::new(&flow, initial.t, initial.vector(), Tolerances::uniform(tol), StepControl::default());
    let mut samples = vec![initial];
    let mut drift: f64 = 0.0;
    let t_stop = initial.t + t_end;
    let mut next_sample = sample_dt.map(|dt| initial.t + dt);
    while st.t < t_stop {
        let seg = st.step(t_stop)?;
        check_escape(st.t, &st.y, ESCAPE_BOUND)?;
        let now = OrbitState::from_vector(st.t, &st.y);
        drift = drift.max(relative_drift(now.energy(potential), e0));
        match (sample_dt, next_sample.as_mut()) {
            (Some(dt), Some(ts)) => {
                while *ts <= seg.t1() + 1e-12 * dt {
                    let tt = ts.min(seg.t1());
                    samples.push(OrbitState::from_vector(tt, &seg.eval(tt)));
                    *ts += dt;
                }
            }
            _ => samples.push(now),
        }
    }
    Ok(Trajectory {
        samples,
        max_energy_drift: drift,
    })
}

/// `p_rho` on the section `rho = 0`, or `None` outside the allowed region.
pub fn section_momentum(potential: &PotentialSpec, energy: f64, z: f64, p_z: f64) -> Option<f64> {
    let arg = 2.0 * (energy - potential.value(0.0, z)) - p_z * p_z;
    (arg >= 0.0).then(|| arg.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint {
    pub z: f64,
    pub p_z: f64,
    pub seed_id: usize,
    pub t: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SectionSet {
    pub energy: f64,
    pub seeds: Vec<(f64, f64)>,
    pub points: Vec<SectionPoint>,
    /// Seeds whose orbit left the box, with the escape time.
    pub escaped: Vec<(usize, f64)>,
}

impl SectionSet {
    pub fn of_seed(&self, id: usize) -> impl Iterator<Item = &SectionPoint> {
        self.points.iter().filter(move |p| p.seed_id == id)
    }
}

/// Crossings of `rho = 0` with `p_rho > 0` inside one step.
fn crossings_in(seg: &DenseSegment<4>) -> Option<[f64; 4]> {
    let a = seg.eval_component(seg.t0, 0);
    let b = seg.eval_component(seg.t1(), 0);
    if a < 0.0 && b >= 0.0 {
        let t = seg.find_root(0, CROSSING_TOL);
        let y = seg.eval(t);
        if y[2] > 0.0 {
            let mut out = y;
            out[0] = t;
            return Some(out);
        }
    }
    None
}

/// Follows one seed `(z0, p_z0)` until `n_crossings` section points have
/// been recorded. Returns `(z, p_z, t)` per crossing.
pub fn section_orbit(
    potential: &PotentialSpec,
    energy: f64,
    seed: (f64, f64),
    n_crossings: usize,
    tol: f64,
) -> Result<Vec<(f64, f64, f64)>, DynamicsError> {
    let (pts, escape) = section_orbit_partial(potential, energy, seed, n_crossings, tol)?;
    match escape {
        Some(e) => Err(e),
        None => Ok(pts),
    }
}

fn section_orbit_partial(
    potential: &PotentialSpec,
    energy: f64,
    seed: (f64, f64),
    n_crossings: usize,
    tol: f64,
) -> Result<(Vec<(f64, f64, f64)>, Option<DynamicsError>), DynamicsError> {
    let p_rho = section_momentum(potential, energy, seed.0, seed.1).ok_or(DynamicsError::SeedNotAllowed {
        z: seed.0,
        pz: seed.1,
        energy,
    })?;
    let flow = MeridianFlow { potential };
    let mut st = Dop853::new(
        &flow,
        0.0,
        [0.0, seed.0, p_rho, seed.1],
        Tolerances::uniform(tol),
        StepControl::default(),
    );
    let mut out = Vec::with_capacity(n_crossings);
    while out.len() < n_crossings {
        let seg = st.step(f64::INFINITY)?;
        if let Err(e) = check_escape(st.t, &st.y, ESCAPE_BOUND) {
            return Ok((out, Some(e)));
        }
        if let Some(c) = crossings_in(&seg) {
            out.push((c[1], c[3], c[0]));
        }
    }
    Ok((out, None))
}

/// Section points for a batch of seeds. Escaping orbits keep the crossings
/// found before the escape and are listed in `escaped`.
pub fn poincare_section(
    potential: &PotentialSpec,
    seeds: &[(f64, f64)],
    energy: f64,
    n_crossings: usize,
    tol: f64,
) -> Result<SectionSet, DynamicsError> {
    let mut set = SectionSet {
        energy,
        seeds: seeds.to_vec(),
        ..Default::default()
    };
    for (id, &seed) in seeds.iter().enumerate() {
        let (pts, escape) = section_orbit_partial(potential, energy, seed, n_crossings, tol)?;
        set.points
            .extend(pts.into_iter().map(|(z, p_z, t)| SectionPoint { z, p_z, seed_id: id, t }));
        if let Some(DynamicsError::EscapeDetected { t, .. }) = escape {
            set.escaped.push((id, t));
        }
    }
    Ok(set)
}

/// [`poincare_section`] with the seeds split over `threads` workers.
pub fn poincare_section_threads(
    potential: &PotentialSpec,
    seeds: &[(f64, f64)],
    energy: f64,
    n_crossings: usize,
    tol: f64,
    threads: usize,
) -> Result<SectionSet, DynamicsError> {
    let threads = threads.clamp(1, seeds.len().max(1));
    if threads == 1 {
        return poincare_section(potential, seeds, energy, n_crossings, tol);
    }
    let chunk = seeds.len().div_ceil(threads);
    let parts: Vec<Result<SectionSet, DynamicsError>> = std::thread::scope(|sc| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|c| sc.spawn(move || poincare_section(potential, c, energy, n_crossings, tol)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("section worker panicked")).collect()
    });
    let mut set = SectionSet {
        energy,
        seeds: seeds.to_vec(),
        ..Default::default()
    };
    for (k, part) in parts.into_iter().enumerate() {
        let part = part?;
        let offset = k * chunk;
        set.points.extend(part.points.into_iter().map(|mut p| {
            p.seed_id += offset;
            p
        }));
        set.escaped.extend(part.escaped.into_iter().map(|(id, t)| (id + offset, t)));
    }
    Ok(set)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonodromyResult {
    pub energy: f64,
    /// Period of the equatorial orbit.
    pub period: f64,
    /// Turning point `rho_max`.
    pub amplitude: f64,
    /// Transverse monodromy over one period, row-major.
    pub matrix: [[f64; 2]; 2],
    pub trace: f64,
    pub determinant: f64,
    /// Transverse map over half a period (the stiffness `V_zz` has period `T/2`).
    pub half_matrix: [[f64; 2]; 2],
    pub half_trace: f64,
    /// `omega_2 / omega_1` from the half-period eigenphase, capped at 1.
    pub rotation: f64,
    pub stable: bool,
}

/// Inner turning point of the equatorial oscillation at energy `E`.
pub fn equatorial_amplitude(potential: &PotentialSpec, energy: f64) -> Result<f64, DynamicsError> {
    let e_crit = potential.critical_energy();
    if !(energy > 0.0 && energy < e_crit) {
        return Err(DynamicsError::EnergyOutOfRange(energy));
    }
    let hi = potential.critical_point().map_or_else(
        || {
            let mut h = 1.0;
            while potential.value(h, 0.0) < energy {
                h *= 2.0;
            }
            h
        },
        |(r, _)| r,
    );
    let (mut lo, mut up) = (0.0, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + up);
        if potential.value(mid, 0.0) < energy {
            lo = mid;
        } else {
            up = mid;
        }
        if up - lo < 1e-16 {
            break;
        }
    }
    Ok(0.5 * (lo + up))
}

fn quarter_period(potential: &PotentialSpec, rho_max: f64, tol: f64) -> Result<f64, DynamicsError> {
    let flow = MeridianFlow { potential };
    let mut st = Dop853::new(
        &flow,
        0.0,
        [rho_max, 0.0, 0.0, 0.0],
        Tolerances::uniform(tol),
        StepControl::default(),
    );
    loop {
        let seg = st.step(f64::INFINITY)?;
        let (a, b) = (seg.eval_component(seg.t0, 0), seg.eval_component(seg.t1(), 0));
        if a > 0.0 && b <= 0.0 {
            return Ok(seg.find_root(0, 1e-15));
        }
        if st.t > 1e6 {
            return Err(DynamicsError::TooManySteps(st.t));
        }
    }
}

fn integrate_to<S: OdeSystem<6>>(st: &mut Dop853<'_, S, 6>, t: f64) -> Result<[f64; 6], DynamicsError> {
    while st.t < t {
        st.step(t)?;
    }
    Ok(st.y)
}

fn matrix_of(y: &[f64; 6]) -> [[f64; 2]; 2] {
    [[y[2], y[4]], [y[3], y[5]]]
}

/// Period, transverse monodromy and stability of the equatorial orbit.
pub fn central_orbit_monodromy(
    potential: &PotentialSpec,
    energy: f64,
    tol: f64,
) -> Result<MonodromyResult, DynamicsError> {
    let rho_max = equatorial_amplitude(potential, energy)?;
    let period = 4.0 * quarter_period(potential, rho_max, tol)?;
    let sys = EquatorialVariational { potential };
    let mut st = Dop853::new(
        &sys,
        0.0,
        [rho_max, 0.0, 1.0, 0.0, 0.0, 1.0],
        Tolerances::uniform(tol),
        StepControl::default(),
    );
    let half = matrix_of(&integrate_to(&mut st, 0.5 * period)?);
    let full = matrix_of(&integrate_to(&mut st, period)?);
    let trace = full[0][0] + full[1][1];
    let half_trace = half[0][0] + half[1][1];
    let rotation = (0.5 * half_trace).clamp(-1.0, 1.0).acos() / std::f64::consts::PI;
    Ok(MonodromyResult {
        energy,
        period,
        amplitude: rho_max,
        matrix: full,
        trace,
        determinant: full[0][0] * full[1][1] - full[0][1] * full[1][0],
        half_matrix: half,
        half_trace,
        rotation,
        stable: trace.abs() < 2.0 && half_trace > -2.0,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThresholdSearch {
    pub energy: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
}

/// Energy where the equatorial orbit turns unstable (half-period trace
/// through -2), by bisection on `[lo, hi]`.
pub fn stability_threshold(
    potential: &PotentialSpec,
    lo: f64,
    hi: f64,
    e_tol: f64,
    tol: f64,
) -> Result<ThresholdSearch, DynamicsError> {
    let f = |e: f64| central_orbit_monodromy(potential, e, tol).map(|m| m.half_trace + 2.0);
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a)?, f(b)?);
    if fa <= 0.0 || fb > 0.0 {
        return Err(DynamicsError::NoBifurcationInRange { m1: 1, m2: 1 });
    }
    let mut it = 0;
    while b - a > e_tol && it < 200 {
        let mid = 0.5 * (a + b);
        if f(mid)? > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        it += 1;
    }
    Ok(ThresholdSearch {
        energy: 0.5 * (a + b),
        bracket: (a, b),
        iterations: it,
    })
}

/// Energy at which `omega_2 / omega_1` of small oscillations around the
/// equatorial orbit equals `m2 / m1`.
pub fn numerical_bifurcation_energy(
    potential: &PotentialSpec,
    m1: u32,
    m2: u32,
    e_tol: f64,
    tol: f64,
) -> Result<f64, DynamicsError> {
    if m1 == 0 || m2 == 0 || m2 > m1 {
        return Err(DynamicsError::NoBifurcationInRange { m1, m2 });
    }
    let target = m2 as f64 / m1 as f64;
    let e_hi = potential.critical_energy().min(10.0) * (1.0 - 1e-6);
    let e_lo = 1e-4 * e_hi;
    let threshold = first_instability(potential, e_lo, e_hi, e_tol, tol)?;
    if m1 == m2 {
        return Ok(threshold.energy);
    }
    let g = |e: f64| central_orbit_monodromy(potential, e, tol).map(|m| m.rotation - target);
    let (mut a, mut b) = (e_lo, threshold.bracket.0);
    if g(a)? >= 0.0 || g(b)? < 0.0 {
        return Err(DynamicsError::NoBifurcationInRange { m1, m2 });
    }
    while b - a > e_tol {
        let mid = 0.5 * (a + b);
        if g(mid)? < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Scans upward from `lo` for the first energy with half-period trace
/// below -2, then bisects. Near the escape energy the period diverges and
/// the trace oscillates, so a plain bracket on `[lo, hi]` is unreliable.
pub fn first_instability(
    potential: &PotentialSpec,
    lo: f64,
    hi: f64,
    e_tol: f64,
    tol: f64,
) -> Result<ThresholdSearch, DynamicsError> {
    let n = 64;
    let mut prev = lo;
    for i in 1..=n {
        let e = lo + (hi - lo) * i as f64 / n as f64;
        if central_orbit_monodromy(potential, e, tol)?.half_trace <= -2.0 {
            return stability_threshold(potential, prev, e, e_tol, tol);
        }
        prev = e;
    }
    Err(DynamicsError::NoBifurcationInRange { m1: 1, m2: 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_builtin_model;

    #[test]
    fn equatorial_plane_is_invariant() {
        let v = build_builtin_model();
        let tr = integrate(&v, OrbitState::new(0.3, 0.0, 0.0, 0.0), 50.0, 1e-12, None).unwrap();
        assert!(tr.samples.iter().all(|s| s.z == 0.0 && s.p_z == 0.0));
        assert!(tr.max_energy_drift < 1e-10);
    }

    #[test]
    fn uniform_sampling() {
        let v = build_builtin_model();
        let tr = integrate(&v, OrbitState::new(0.3, 0.1, 0.0, 0.0), 10.0, 1e-10, Some(0.5)).unwrap();
        assert_eq!(tr.samples.len(), 21);
        assert!((tr.samples[20].t - 10.0).abs() < 1e-12);
    }

    #[test]
    fn central_seed_is_a_fixed_point() {
        let v = build_builtin_model();
        let pts = section_orbit(&v, 0.1, (0.0, 0.0), 5, 1e-12).unwrap();
        for (z, pz, _) in pts {
            assert!(z.abs() < 1e-12 && pz.abs() < 1e-12);
        }
    }

    #[test]
    fn seed_outside_region() {
        let v = build_builtin_model();
        assert!(matches!(
            section_orbit(&v, 0.1, (0.0, 0.5), 5, 1e-12),
            Err(DynamicsError::SeedNotAllowed { .. })
        ));
    }

    #[test]
    fn small_energy_monodromy_is_near_identity() {
        let v = build_builtin_model();
        let m = central_orbit_monodromy(&v, 1e-4, 1e-12).unwrap();
        // transverse frequency grows like the equatorial amplitude
        let nu = 1e-4f64.sqrt();
        assert!((m.trace - 2.0 * (2.0 * std::f64::consts::PI * nu).cos()).abs() < 1e-4);
        assert!((m.rotation - nu).abs() < 1e-5);
        assert!((m.period - 2.0 * std::f64::consts::PI).abs() < 1e-3);
        assert!((m.determinant - 1.0).abs() < 1e-10);
    }

    #[test]
    fn out_of_range_energy() {
        let v = build_builtin_model();
        assert!(matches!(
            central_orbit_monodromy(&v, 0.7, 1e-12),
            Err(DynamicsError::EnergyOutOfRange(_))
        ));
    }
}
