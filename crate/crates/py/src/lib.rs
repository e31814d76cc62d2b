//! Python bindings: potentials, normal forms, formal integrals, sections
//! and monodromy.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use bottleform::analysis::{bifurcation_energy, remainder_norm};
use bottleform::dynamics::{self, DEFAULT_TOL};
use bottleform::invariants::{count_islands, section_levels, SectionFunction, SectionGrid};
use bottleform::model::{build_builtin_model, parse_potential};
use bottleform::normform::{extract_omega2_squared, normalize as run_normalize, NormalizationState};
use bottleform::{back_transform, prepare, Mode, ModeRequest, PotentialSpec};

create_exception!(bottleform_py, BottleformError, PyException);

fn py_err<E: Into<bottleform::Error>>(e: E) -> PyErr {
    let e: bottleform::Error = e.into();
    BottleformError::new_err(format!("{}: {e}", e.name()))
}

/// Polynomial potential `V(rho, z)`.
#[pyclass(name = "Potential", frozen)]
struct PyPotential {
    inner: PotentialSpec,
}

#[pymethods]
impl PyPotential {
    /// The builtin magnetic-bottle potential.
    #[staticmethod]
    fn builtin() -> Self {
        PyPotential {
            inner: build_builtin_model(),
        }
    }

    /// Parses and validates a polynomial expression in `rho` and `z`.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let inner = parse_potential(text).map_err(py_err)?;
        inner.validate().map_err(py_err)?;
        Ok(PyPotential { inner })
    }

    fn value(&self, rho: f64, z: f64) -> f64 {
        self.inner.value(rho, z)
    }

    fn energy(&self, rho: f64, z: f64, p_rho: f64, p_z: f64) -> f64 {
        self.inner.energy(rho, z, p_rho, p_z)
    }

    #[getter]
    fn critical_energy(&self) -> f64 {
        self.inner.critical_energy()
    }

    #[getter]
    fn text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!("Potential({:?})", self.inner.to_text())
    }
}

fn potential_or_builtin(p: Option<&PyPotential>) -> PotentialSpec {
    p.map_or_else(build_builtin_model, |p| p.inner.clone())
}

/// Normal form after `order` steps.
#[pyclass(name = "NormalForm", frozen)]
struct PyNormalForm {
    state: NormalizationState,
    potential: PotentialSpec,
}

type Term = (u32, u32, u32, u32, f64, f64, u32);

fn records(p: &bottleform::CanonicalPolynomial) -> Vec<Term> {
    p.to_records()
        .into_iter()
        .map(|r| (r.k1, r.l1, r.k2, r.l2, r.re, r.im, r.bk))
        .collect()
}

#[pymethods]
impl PyNormalForm {
    #[getter]
    fn order(&self) -> u32 {
        self.state.step
    }

    #[getter]
    fn trunc(&self) -> u32 {
        self.state.r_trunc
    }

    #[getter]
    fn mode(&self) -> &'static str {
        match self.state.mode {
            Mode::Nonresonant => "nonres",
            Mode::Resonant(_) => "res",
        }
    }

    /// `(m1, m2, I1*, omega1*, omega2*)` in resonant mode, else `None`.
    #[getter]
    fn resonance(&self) -> Option<(u32, u32, f64, f64, f64)> {
        match self.state.mode {
            Mode::Nonresonant => None,
            Mode::Resonant(p) => Some((p.m1, p.m2, p.action, p.omega1, p.omega2)),
        }
    }

    /// Terms `(k1, l1, k2, l2, re, im, bk)` of `Z_0 + ... + Z_r`.
    fn normal_form_terms(&self) -> Vec<Term> {
        records(&self.state.normal_form())
    }

    /// Terms of the generator `chi_r`, `1 <= r <= order`.
    fn generator_terms(&self, r: usize) -> PyResult<Vec<Term>> {
        if r == 0 || r > self.state.generators.len() {
            return Err(BottleformError::new_err(format!("no generator of order {r}")));
        }
        Ok(records(&self.state.generators[r - 1]))
    }

    fn remainder_terms(&self) -> Vec<Term> {
        records(&self.state.remainder())
    }

    /// `{(n, k2, l2): c}` with `Z = sum c I1^n q2^k2 p2^l2` (nonresonant only).
    fn action_form(&self) -> PyResult<BTreeMap<(u32, u32, u32), f64>> {
        self.state.action_form().map_err(py_err)
    }

    /// Power-series coefficients of `omega_2^2(I1)`.
    fn omega2_squared(&self) -> PyResult<Vec<f64>> {
        extract_omega2_squared(&self.state).map_err(py_err)
    }

    fn scaled_residuals(&self) -> Vec<f64> {
        (1..=self.state.step).map(|r| self.state.scaled_residual(r)).collect()
    }

    /// `||R^(r,N)||` at energy `E`, mirror energy `dE` and ratio `beta`.
    #[pyo3(signature = (n, energy, delta_e, beta = 0.0))]
    fn remainder_norm(&self, n: u32, energy: f64, delta_e: f64, beta: f64) -> PyResult<f64> {
        remainder_norm(&self.state, self.state.step, n, energy, delta_e, beta).map_err(py_err)
    }

    /// Normal-form estimate `(action, energy)` of the `m2:m1` bifurcation.
    fn bifurcation_energy(&self, m1: u32, m2: u32) -> PyResult<(f64, f64)> {
        let b = bifurcation_energy(&self.state, m1, m2).map_err(py_err)?;
        Ok((b.action, b.energy))
    }

    /// Formal integral in the original variables.
    fn formal_integral(&self) -> PyResult<PyFormalIntegral> {
        Ok(PyFormalIntegral {
            inner: back_transform(&self.state).map_err(py_err)?,
            potential: self.potential.clone(),
        })
    }
}

/// Runs the normalization; `mode` is "nonres" or "res".
#[pyfunction]
#[pyo3(signature = (potential = None, order = 5, trunc = 20, mode = "nonres", m1 = 2, m2 = 1, bif_order = 8))]
fn normalize(
    py: Python<'_>,
    potential: Option<&PyPotential>,
    order: u32,
    trunc: u32,
    mode: &str,
    m1: u32,
    m2: u32,
    bif_order: u32,
) -> PyResult<PyNormalForm> {
    let request = match mode {
        "nonres" => ModeRequest::Nonresonant,
        "res" => ModeRequest::Resonant {
            m1,
            m2,
            bifurcation_order: bif_order,
        },
        other => return Err(BottleformError::new_err(format!("unknown mode {other:?}"))),
    };
    if order > trunc {
        return Err(BottleformError::new_err("order exceeds trunc"));
    }
    let potential = potential_or_builtin(potential);
    potential.validate().map_err(py_err)?;
    let state = py.detach(|| {
        let (prepared, _) = prepare(&potential, request, trunc)?;
        run_normalize(&prepared, order, trunc).map_err(bottleform::Error::from)
    });
    Ok(PyNormalForm {
        state: state.map_err(py_err)?,
        potential,
    })
}

/// Real polynomial `Phi(rho, p_rho, z, p_z)`.
#[pyclass(name = "FormalIntegral", frozen)]
struct PyFormalIntegral {
    inner: bottleform::FormalIntegral,
    potential: PotentialSpec,
}

#[pymethods]
impl PyFormalIntegral {
    #[getter]
    fn order(&self) -> u32 {
        self.inner.order
    }

    #[getter]
    fn max_imag_residue(&self) -> f64 {
        self.inner.max_imag_residue
    }

    fn __len__(&self) -> usize {
        self.inner.real.len()
    }

    /// `{(a, b, c, d): coeff}` for `rho^a p_rho^b z^c p_z^d`.
    fn terms(&self) -> BTreeMap<(u32, u32, u32, u32), f64> {
        self.inner.real.terms.iter().map(|(e, &c)| ((e[0], e[1], e[2], e[3]), c)).collect()
    }

    fn __call__(&self, rho: f64, p_rho: f64, z: f64, p_z: f64) -> f64 {
        self.inner.eval(rho, p_rho, z, p_z)
    }

    /// Value on the section `rho = 0` at energy `E`, `None` outside the allowed region.
    fn section_value(&self, energy: f64, z: f64, p_z: f64) -> Option<f64> {
        SectionFunction {
            integral: &self.inner,
            potential: &self.potential,
            energy,
        }
        .value(z, p_z)
    }

    /// Islands enclosed by the level through `seed` on an `n x n` grid.
    #[pyo3(signature = (energy, seed, grid = 400))]
    fn count_islands(&self, py: Python<'_>, energy: f64, seed: (f64, f64), grid: usize) -> PyResult<usize> {
        let mut g = SectionGrid::default_for(&self.potential, energy);
        g.nz = grid;
        g.npz = grid;
        let levels = py
            .detach(|| section_levels(&self.inner, &self.potential, energy, g, &[seed]))
            .map_err(py_err)?;
        Ok(count_islands(&levels.field, levels.levels[0].level))
    }
}

/// Section crossings `(z, p_z, seed_id)` of the numerical orbits.
#[pyfunction]
#[pyo3(signature = (energy, seeds, n_crossings = 500, potential = None, tol = DEFAULT_TOL, threads = 1))]
fn poincare_section(
    py: Python<'_>,
    energy: f64,
    seeds: Vec<(f64, f64)>,
    n_crossings: usize,
    potential: Option<&PyPotential>,
    tol: f64,
    threads: usize,
) -> PyResult<Vec<(f64, f64, usize)>> {
    let potential = potential_or_builtin(potential);
    let set = py
        .detach(|| dynamics::poincare_section_threads(&potential, &seeds, energy, n_crossings, tol, threads))
        .map_err(py_err)?;
    Ok(set.points.iter().map(|p| (p.z, p.p_z, p.seed_id)).collect())
}

/// Linear stability of the equatorial orbit at one energy.
#[pyclass(name = "Monodromy", frozen, get_all)]
struct PyMonodromy {
    energy: f64,
    period: f64,
    trace: f64,
    half_trace: f64,
    determinant: f64,
    rotation: f64,
    stable: bool,
}

#[pyfunction]
#[pyo3(signature = (energy, potential = None, tol = DEFAULT_TOL))]
fn monodromy(energy: f64, potential: Option<&PyPotential>, tol: f64) -> PyResult<PyMonodromy> {
    let potential = potential_or_builtin(potential);
    let m = dynamics::central_orbit_monodromy(&potential, energy, tol).map_err(py_err)?;
    Ok(PyMonodromy {
        energy: m.energy,
        period: m.period,
        trace: m.trace,
        half_trace: m.half_trace,
        determinant: m.determinant,
        rotation: m.rotation,
        stable: m.stable,
    })
}

/// Energy where the equatorial orbit first turns unstable.
#[pyfunction]
#[pyo3(signature = (potential = None, e_tol = 1e-8))]
fn stability_threshold(py: Python<'_>, potential: Option<&PyPotential>, e_tol: f64) -> PyResult<f64> {
    let potential = potential_or_builtin(potential);
    let e_crit = potential.critical_energy();
    if !e_crit.is_finite() {
        return Err(BottleformError::new_err("the potential has no escape energy"));
    }
    py.detach(|| dynamics::first_instability(&potential, 1e-3 * e_crit, (1.0 - 1e-6) * e_crit, e_tol, DEFAULT_TOL))
        .map(|s| s.energy)
        .map_err(py_err)
}

/// Energy where the `m2:m1` resonant orbits bifurcate, from the monodromy.
#[pyfunction]
#[pyo3(signature = (m1, m2, potential = None, e_tol = 1e-9))]
fn numerical_bifurcation_energy(
    py: Python<'_>,
    m1: u32,
    m2: u32,
    potential: Option<&PyPotential>,
    e_tol: f64,
) -> PyResult<f64> {
    let potential = potential_or_builtin(potential);
    py.detach(|| dynamics::numerical_bifurcation_energy(&potential, m1, m2, e_tol, DEFAULT_TOL))
        .map_err(py_err)
}

#[pymodule]
fn bottleform_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BottleformError", m.py().get_type::<BottleformError>())?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PyNormalForm>()?;
    m.add_class::<PyFormalIntegral>()?;
    m.add_class::<PyMonodromy>()?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(poincare_section, m)?)?;
    m.add_function(wrap_pyfunction!(monodromy, m)?)?;
    m.add_function(wrap_pyfunction!(stability_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(numerical_bifurcation_energy, m)?)?;
    Ok(())
}
