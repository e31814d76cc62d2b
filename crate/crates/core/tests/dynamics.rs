use std::collections::BTreeSet;

use bottleform::dynamics::{central_orbit_monodromy, integrate, section_orbit, OrbitState};
use bottleform::model::build_builtin_model;

fn launch(energy: f64, z: f64, p_z: f64) -> OrbitState {
    let v = build_builtin_model();
    let p_rho = (2.0 * (energy - v.value(0.0, z)) - p_z * p_z).sqrt();
    OrbitState::new(0.0, z, p_rho, p_z)
}

#[test]
fn energy_drift_over_ten_thousand_time_units() {
    let v = build_builtin_model();
    for (e, pz) in [(0.1, 0.2), (0.1, 0.05), (0.2, 0.3)] {
        let traj = integrate(&v, launch(e, 0.0, pz), 1e4, 1e-14, None).unwrap();
        assert!(traj.max_energy_drift < 1e-10, "E={e}: drift {:e}", traj.max_energy_drift);
    }
}

#[test]
fn time_reversal_returns_to_start() {
    let v = build_builtin_model();
    let tol = 1e-12;
    for (e, pz) in [(0.05, 0.1), (0.1, 0.2), (0.2, 0.3)] {
        let start = launch(e, 0.0, pz);
        let fwd = integrate(&v, start, 20.0, tol, None).unwrap();
        let end = *fwd.samples.last().unwrap();
        let flipped = OrbitState::new(end.rho, end.z, -end.p_rho, -end.p_z);
        let back = integrate(&v, flipped, 20.0, tol, None).unwrap();
        let fin = *back.samples.last().unwrap();
        let err = [
            fin.rho - start.rho,
            fin.z - start.z,
            -fin.p_rho - start.p_rho,
            -fin.p_z - start.p_z,
        ]
        .iter()
        .fold(0.0f64, |m, d| m.max(d.abs()));
        assert!(err < 10.0 * tol, "E={e}: error {err:e}");
    }
}

/// Crossings of an orbit on an invariant circle are visited like a circle
/// rotation: sorted by angle about their centroid, the index step from a
/// point to its angular successor takes at most three values (three-gap
/// theorem). Scattered crossings give many.
fn successor_steps(points: &[(f64, f64)]) -> usize {
    let n = points.len();
    let cz = points.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let cp = points.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let mut order: Vec<(f64, i64)> = points
        .iter()
        .enumerate()
        .map(|(i, &(z, p))| ((p - cp).atan2(z - cz), i as i64))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let steps: BTreeSet<i64> = (0..n).map(|j| order[(j + 1) % n].1 - order[j].1).collect();
    steps.len()
}

fn crossings(energy: f64, pz: f64, n: usize) -> Vec<(f64, f64)> {
    let v = build_builtin_model();
    section_orbit(&v, energy, (0.0, pz), n, 1e-12)
        .unwrap()
        .into_iter()
        .map(|(z, p, _)| (z, p))
        .collect()
}

#[test]
fn nonresonant_crossings_are_angularly_ordered() {
    for pz in [0.08, 0.1, 0.12, 0.15, 0.2, 0.25, 0.3] {
        let steps = successor_steps(&crossings(0.1, pz, 300));
        assert!(steps <= 3, "seed pz={pz}: {steps} successor steps");
    }
}

#[test]
fn ordering_test_rejects_scattered_crossings() {
    // outermost seed at E = 0.1 is not on an invariant circle
    assert!(successor_steps(&crossings(0.1, 0.4, 300)) > 10);
}

#[test]
fn monodromy_is_symplectic() {
    let v = build_builtin_model();
    for e in [0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.58] {
        let m = central_orbit_monodromy(&v, e, 1e-12).unwrap();
        assert!((m.determinant - 1.0).abs() < 1e-8, "E={e}: det {}", m.determinant);
        let h = m.half_matrix;
        let dh = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        assert!((dh - 1.0).abs() < 1e-8, "E={e}: half det {dh}");
    }
}

#[test]
fn stability_changes_across_threshold() {
    let v = build_builtin_model();
    assert!(central_orbit_monodromy(&v, 0.3, 1e-12).unwrap().stable);
    assert!(!central_orbit_monodromy(&v, 0.38, 1e-12).unwrap().stable);
}

#[test]
fn section_is_symmetric_under_point_reflection() {
    let v = build_builtin_model();
    let a = section_orbit(&v, 0.1, (0.05, 0.2), 50, 1e-12).unwrap();
    let b = section_orbit(&v, 0.1, (-0.05, -0.2), 50, 1e-12).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x.0 + y.0).abs() < 1e-8 && (x.1 + y.1).abs() < 1e-8);
    }
}
