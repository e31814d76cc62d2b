use serde_json::{json, Value};

use bottleform::analysis::{
    chaos_threshold_convergence, log_grid, optimal_order_scan, remainder_censuses, FitConfig,
};
use bottleform::dynamics::{
    central_orbit_monodromy, first_instability, numerical_bifurcation_energy, poincare_section_threads,
    DEFAULT_TOL,
};
use bottleform::invariants::{count_islands, section_levels_threads, SectionGrid};
use bottleform::model::complexify_nonresonant;
use bottleform::normform::{extract_omega2_squared, normalize};
use bottleform::{back_transform, prepare, Mode, ModeRequest, PotentialSpec};

use crate::args::*;
use crate::output::{num, RunConfig, Writer};
use crate::CliError;

/// Monodromy tolerance used by the threshold and bifurcation searches.
const SEARCH_TOL: f64 = 1e-12;

fn request(m: &ModeOpts) -> ModeRequest {
    match m.mode {
        ModeArg::Nonres => ModeRequest::Nonresonant,
        ModeArg::Res => ModeRequest::Resonant {
            m1: m.m1,
            m2: m.m2,
            bifurcation_order: m.bif_order,
        },
    }
}

fn mode_name(m: &Mode) -> &'static str {
    match m {
        Mode::Nonresonant => "nonres",
        Mode::Resonant(_) => "res",
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn check_mode(m: &ModeOpts) -> Result<(), CliError> {
    if m.mode == ModeArg::Res {
        if m.m1 == 0 || m.m2 == 0 {
            return Err(config_err("--m1 and --m2 must be positive"));
        }
        if m.bif_order < 2 {
            return Err(config_err("--bif-order must be at least 2"));
        }
    }
    Ok(())
}

fn parse_resonance(s: &str) -> Result<(u32, u32), CliError> {
    let bad = || config_err(format!("resonance {s:?} is not of the form m1:m2"));
    let (a, b) = s.trim().split_once(':').ok_or_else(bad)?;
    let m1: u32 = a.trim().parse().map_err(|_| bad())?;
    let m2: u32 = b.trim().parse().map_err(|_| bad())?;
    if m1 == 0 || m2 == 0 {
        return Err(bad());
    }
    Ok((m1, m2))
}

/// Checks everything that can be checked before computing.
pub fn validate(cfg: &RunConfig, potential: &PotentialSpec) -> Result<(), CliError> {
    if cfg.threads == 0 {
        return Err(config_err("--threads must be at least 1"));
    }
    match &cfg.command {
        Command::Normalize(a) => {
            check_mode(&a.mode)?;
            if a.order > a.trunc {
                return Err(config_err(format!("--order {} exceeds --trunc {}", a.order, a.trunc)));
            }
        }
        Command::Section(a) => {
            check_mode(&a.mode)?;
            let e_crit = potential.critical_energy();
            if !(a.energy > 0.0 && a.energy < e_crit) {
                return Err(config_err(format!("--energy must lie in (0, {e_crit})")));
            }
            if a.trunc.is_some_and(|t| t < a.order) {
                return Err(config_err("--trunc must be at least --order"));
            }
            if a.grid < 3 || !(a.z_half_width > 0.0) || !(a.tol > 0.0) {
                return Err(config_err("--grid must be >= 3, --z-half-width and --tol positive"));
            }
        }
        Command::Asymptotics(a) => {
            check_mode(&a.mode)?;
            if !(a.energy > 0.0) {
                return Err(config_err("--energy must be positive"));
            }
            if a.r_max == 0 || a.r_max >= a.trunc {
                return Err(config_err("need 1 <= --r-max < --trunc"));
            }
            let des = delta_energies(a);
            if des.is_empty() {
                return Err(config_err("empty mirror-energy grid"));
            }
            if let Some(de) = des.iter().find(|&&d| !(d >= 0.0 && d < a.energy)) {
                return Err(config_err(format!("mirror energy {de} outside [0, {})", a.energy)));
            }
        }
        Command::Bifurcation(a) => {
            if a.order < 2 {
                return Err(config_err("--order must be at least 2"));
            }
            for r in &a.resonances {
                parse_resonance(r)?;
            }
        }
        Command::ChaosThreshold(a) => {
            if a.r_min < 2 || a.r_min > a.r_max {
                return Err(config_err("need 2 <= --r-min <= --r-max"));
            }
            if !(a.e_tol > 0.0) {
                return Err(config_err("--e-tol must be positive"));
            }
        }
    }
    Ok(())
}

fn terms_json(p: &bottleform::CanonicalPolynomial) -> Value {
    json!(p.to_records())
}

pub fn normal_form(a: &NormalizeArgs, potential: &PotentialSpec, w: &Writer) -> Result<(), CliError> {
    let (prepared, estimate) = prepare(potential, request(&a.mode), a.trunc)?;
    let state = normalize(&prepared, a.order, a.trunc)?;
    let z: Vec<Value> = state
        .z
        .iter()
        .enumerate()
        .map(|(r, p)| json!({ "order": r, "terms": terms_json(p) }))
        .collect();
    let mut nf = json!({
        "mode": state.mode,
        "order": state.step,
        "trunc": state.r_trunc,
        "omega10": state.omega10,
        "critical_energy": state.critical_energy,
        "resonance_estimate": estimate,
        "z": z,
    });
    if matches!(state.mode, Mode::Nonresonant) {
        let action: Vec<Value> = state
            .action_form()?
            .into_iter()
            .map(|((n, k2, l2), c)| json!({ "i1": n, "k2": k2, "l2": l2, "coeff": c }))
            .collect();
        nf["action_form"] = json!(action);
        if state.step >= 1 {
            nf["omega2_squared"] = json!(extract_omega2_squared(&state)?);
        }
    }
    w.json("normalform.json", nf)?;
    let gens: Vec<Value> = state
        .generators
        .iter()
        .enumerate()
        .map(|(i, g)| json!({ "order": i + 1, "terms": terms_json(g) }))
        .collect();
    w.json("generators.json", json!({ "mode": mode_name(&state.mode), "generators": gens }))?;
    let steps: Vec<Value> = (1..=state.step)
        .map(|r| {
            let i = r as usize - 1;
            json!({
                "order": r,
                "residual": state.residuals[i],
                "scale": state.residual_scales[i],
                "scaled_residual": state.scaled_residual(r),
            })
        })
        .collect();
    w.json(
        "remainder.json",
        json!({
            "mode": mode_name(&state.mode),
            "order": state.step,
            "trunc": state.r_trunc,
            "terms": terms_json(&state.remainder()),
            "residuals": steps,
        }),
    )
}

/// Seeds on the `z = 0` axis, evenly spaced inside the allowed `p_z` range.
fn default_seeds(energy: f64) -> Vec<(f64, f64)> {
    let p = (2.0 * energy).sqrt();
    (1..=7).map(|k| (0.0, k as f64 / 8.0 * p)).collect()
}

pub fn section(cfg: &RunConfig, a: &SectionArgs, potential: &PotentialSpec, w: &Writer) -> Result<(), CliError> {
    let seeds = match &cfg.seeds {
        Some(s) => s.seeds.clone(),
        None => default_seeds(a.energy),
    };
    let trunc = a.trunc.unwrap_or(a.order).max(1);
    let (prepared, estimate) = prepare(potential, request(&a.mode), trunc)?;
    let state = normalize(&prepared, a.order, trunc)?;
    let integral = back_transform(&state)?;
    let mut grid = SectionGrid::default_for(potential, a.energy);
    grid.nz = a.grid;
    grid.npz = a.grid;
    grid.z_min = -a.z_half_width;
    grid.z_max = a.z_half_width;
    let levels = section_levels_threads(&integral, potential, a.energy, grid, &seeds, cfg.threads)?;
    let e = num(a.energy);
    w.csv(
        &format!("sections/levels_E{e}_r{}.csv", a.order),
        &["z", "pz", "phi", "valid"],
        levels.field.rows().map(|(z, pz, phi, valid)| {
            vec![num(z), num(pz), num(phi), u8::from(valid).to_string()]
        }),
    )?;
    let level_records: Vec<Value> = levels
        .levels
        .iter()
        .enumerate()
        .map(|(id, l)| {
            json!({
                "seed_id": id,
                "z": l.seed.0,
                "pz": l.seed.1,
                "level": l.level,
                "islands": count_islands(&levels.field, l.level),
            })
        })
        .collect();
    w.json(
        "levels.json",
        json!({
            "energy": a.energy,
            "mode": state.mode,
            "order": a.order,
            "trunc": trunc,
            "resonance_estimate": estimate,
            "max_imag_residue": integral.max_imag_residue,
            "grid": levels.field.grid,
            "levels": level_records,
        }),
    )?;

    if seeds.is_empty() {
        log::warn!("seed list is empty: no orbit output written");
    } else {
        let set = poincare_section_threads(potential, &seeds, a.energy, a.n_crossings, a.tol, cfg.threads)?;
        for &(id, t) in &set.escaped {
            log::warn!("seed {id} escaped at t = {t}");
        }
        w.csv(
            &format!("sections/numeric_E{e}.csv"),
            &["z", "pz", "seed_id"],
            set.points.iter().map(|p| vec![num(p.z), num(p.p_z), p.seed_id.to_string()]),
        )?;
    }

    let m = central_orbit_monodromy(potential, a.energy, a.tol.min(DEFAULT_TOL))?;
    w.json(
        "monodromy.json",
        json!({
            "E": m.energy,
            "T": m.period,
            "trace": m.trace,
            "stable": m.stable,
            "half_trace": m.half_trace,
            "rotation": m.rotation,
            "determinant": m.determinant,
            "matrix": m.matrix,
        }),
    )
}

fn delta_energies(a: &AsymptoticsArgs) -> Vec<f64> {
    match &a.delta_e {
        Some(v) => v.clone(),
        None => log_grid(a.de_min, a.de_max, a.per_decade),
    }
}

pub fn asymptotics(a: &AsymptoticsArgs, potential: &PotentialSpec, w: &Writer) -> Result<(), CliError> {
    let (prepared, estimate) = prepare(potential, request(&a.mode), a.trunc)?;
    let censuses = remainder_censuses(&prepared, a.r_max, a.trunc)?;
    let des = delta_energies(a);
    let config = FitConfig {
        power_law_max: a.power_law_max,
        exponential_max: a.exponential_max,
        delta_e0: a.delta_e0,
    };
    let (table, fit) = optimal_order_scan(&censuses, a.energy, a.beta, &des, a.trunc, &config)?;
    w.csv(
        "asymptotics.csv",
        &["mode", "E", "beta", "deltaE", "r", "N", "norm"],
        table.rows.iter().map(|r| {
            vec![
                r.mode.clone(),
                num(r.energy),
                num(r.beta),
                num(r.delta_e),
                r.r.to_string(),
                r.n.to_string(),
                num(r.norm),
            ]
        }),
    )?;
    let single = des.len() == 1;
    let notice = single.then(|| {
        let msg = "single mirror energy: one norm curve written, fits skipped";
        log::warn!("{msg}");
        msg
    });
    let ranges = json!({
        "power_law": [0.0, a.power_law_max],
        "exponential": [0.0, a.exponential_max],
    });
    w.json(
        "fits.json",
        json!({
            "mode": mode_name(&prepared.mode),
            "E": a.energy,
            "beta": a.beta,
            "N": a.trunc,
            "resonance_estimate": estimate,
            "r_opt": fit.r_opt,
            "power_law": if single { Value::Null } else { json!(fit.power_law) },
            "exponential": if single { Value::Null } else { json!(fit.exponential) },
            "ranges": ranges,
            "warnings": fit.warnings,
            "notice": notice,
        }),
    )
}

pub fn bifurcation(a: &BifurcationArgs, potential: &PotentialSpec, w: &Writer) -> Result<(), CliError> {
    let prepared = complexify_nonresonant(potential, a.order)?;
    let state = normalize(&prepared, a.order, a.order)?;
    let e_crit = potential.critical_energy();
    let mut records = Vec::new();
    for r in &a.resonances {
        let (m1, m2) = parse_resonance(r)?;
        let analytic = match bottleform::analysis::bifurcation_energy(&state, m1, m2) {
            Ok(b) => json!(b),
            Err(e) => {
                let e = bottleform::Error::from(e);
                log::warn!("{m1}:{m2}: {e}");
                json!({ "error": e.name() })
            }
        };
        let numeric = if a.no_numeric || !e_crit.is_finite() {
            Value::Null
        } else {
            match numerical_bifurcation_energy(potential, m1, m2, 1e-9, SEARCH_TOL) {
                Ok(e) => json!(e),
                Err(e) => {
                    let e = bottleform::Error::from(e);
                    log::warn!("{m1}:{m2} numeric: {e}");
                    json!({ "error": e.name() })
                }
            }
        };
        records.push(json!({
            "resonance": format!("{m1}:{m2}"),
            "m1": m1,
            "m2": m2,
            "normal_form": analytic,
            "numeric": numeric,
        }));
    }
    w.json(
        "bifurcations.json",
        json!({ "order": a.order, "critical_energy": e_crit, "bifurcations": records }),
    )
}

pub fn chaos_threshold(a: &ThresholdArgs, potential: &PotentialSpec, w: &Writer) -> Result<(), CliError> {
    let e_crit = potential.critical_energy();
    if !e_crit.is_finite() {
        return Err(config_err("the potential has no escape energy; the threshold search needs one"));
    }
    let search = first_instability(potential, 1e-3 * e_crit, (1.0 - 1e-6) * e_crit, a.e_tol, SEARCH_TOL)?;
    let reference = a.reference.unwrap_or(search.energy);
    let prepared = complexify_nonresonant(potential, a.r_max)?;
    let orders: Vec<u32> = (a.r_min..=a.r_max).collect();
    let rows = chaos_threshold_convergence(&prepared, &orders, reference)?;
    w.json(
        "threshold.json",
        json!({
            "monodromy": {
                "energy": search.energy,
                "bracket": search.bracket,
                "iterations": search.iterations,
            },
            "reference": reference,
            "normal_form": rows,
        }),
    )
}
