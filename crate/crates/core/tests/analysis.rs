use bottleform::analysis::{
    bifurcation_energy, chaos_threshold_convergence, log_grid, optimal_order_scan, remainder_censuses,
    AnalysisWarning, FitConfig, RemainderCensus,
};
use bottleform::model::{build_builtin_model, complexify_nonresonant};
use bottleform::normform::normalize;

#[test]
fn lower_order_resonances_bifurcate_at_higher_energy() {
    let prepared = complexify_nonresonant(&build_builtin_model(), 8).unwrap();
    let state = normalize(&prepared, 8, 8).unwrap();
    let e: Vec<f64> = [(4, 1), (3, 1), (2, 1), (1, 1)]
        .iter()
        .map(|&(m1, m2)| bifurcation_energy(&state, m1, m2).unwrap().energy)
        .collect();
    assert!(e.windows(2).all(|w| w[0] < w[1]), "{e:?}");
    assert!(e[3] < 16.0 / 27.0);
}

#[test]
fn bifurcation_condition_holds_at_the_root() {
    let prepared = complexify_nonresonant(&build_builtin_model(), 8).unwrap();
    let state = normalize(&prepared, 8, 8).unwrap();
    for (m1, m2) in [(3, 1), (2, 1)] {
        let b = bifurcation_energy(&state, m1, m2).unwrap();
        assert!((m2 as f64 * b.omega1 - m1 as f64 * b.omega2).abs() < 1e-10);
    }
}

#[test]
fn norms_do_not_decrease_with_truncation() {
    let prepared = complexify_nonresonant(&build_builtin_model(), 20).unwrap();
    let censuses = remainder_censuses(&prepared, 8, 20).unwrap();
    for c in &censuses {
        for (e, de, beta) in [(0.2, 1e-4, 0.0), (0.2, 1e-2, 0.0), (0.1, 1e-3, 0.5)] {
            let norms: Vec<f64> = (c.r + 1..=20).map(|n| c.norm(n, e, de, beta).unwrap()).collect();
            assert!(norms.windows(2).all(|w| w[1] >= w[0]), "r={} {norms:?}", c.r);
        }
    }
}

#[test]
fn norm_rejects_out_of_range_arguments() {
    let prepared = complexify_nonresonant(&build_builtin_model(), 10).unwrap();
    let c = RemainderCensus::from_state(&normalize(&prepared, 4, 10).unwrap());
    assert!(c.norm(4, 0.2, 1e-3, 0.0).is_err());
    assert!(c.norm(11, 0.2, 1e-3, 0.0).is_err());
    assert!(c.norm(10, 0.2, 0.2, 0.0).is_err());
}

#[test]
fn optimal_order_is_interior_and_falls_with_mirror_energy() {
    let prepared = complexify_nonresonant(&build_builtin_model(), 20).unwrap();
    let censuses = remainder_censuses(&prepared, 19, 20).unwrap();
    let des = log_grid(1e-5, 1e-2, 5);
    let (table, fit) = optimal_order_scan(&censuses, 0.2, 0.0, &des, 20, &FitConfig::default()).unwrap();
    assert!(fit.warnings.is_empty(), "{:?}", fit.warnings);
    for o in &fit.r_opt {
        let curve = table.curve(o.delta_e, 20);
        let (r_lo, r_hi) = (curve[0].0, curve.last().unwrap().0);
        assert!(o.r_opt > r_lo && o.r_opt < r_hi, "dE={}: r_opt={}", o.delta_e, o.r_opt);
    }
    assert!(fit.r_opt.windows(2).all(|w| w[1].r_opt <= w[0].r_opt));
    assert!(fit.r_opt.first().unwrap().r_opt > fit.r_opt.last().unwrap().r_opt);
}

#[test]
fn short_scan_flags_an_edge_minimum() {
    let prepared = complexify_nonresonant(&build_builtin_model(), 20).unwrap();
    let censuses = remainder_censuses(&prepared, 6, 20).unwrap();
    let (_, fit) = optimal_order_scan(&censuses, 0.2, 0.0, &[1e-5], 20, &FitConfig::default()).unwrap();
    assert!(fit
        .warnings
        .iter()
        .any(|w| matches!(w, AnalysisWarning::FlatMinimumWarning { r: 6, .. })));
    // a single mirror energy cannot be fitted
    assert!(fit.power_law.is_none() && fit.exponential.is_none());
}

#[test]
fn scan_is_deterministic() {
    let prepared = complexify_nonresonant(&build_builtin_model(), 12).unwrap();
    let run = || {
        let censuses = remainder_censuses(&prepared, 10, 12).unwrap();
        let (table, _) = optimal_order_scan(&censuses, 0.2, 0.3, &[1e-4, 1e-3], 12, &FitConfig::default()).unwrap();
        table.rows.iter().map(|r| r.norm.to_bits()).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn threshold_estimates_approach_from_above() {
    let prepared = complexify_nonresonant(&build_builtin_model(), 16).unwrap();
    let orders: Vec<u32> = (10..=16).collect();
    let rows = chaos_threshold_convergence(&prepared, &orders, 0.0).unwrap();
    let e: Vec<f64> = rows.iter().map(|r| r.energy.unwrap()).collect();
    assert!(e.windows(2).all(|w| w[1] < w[0]), "{e:?}");
}
