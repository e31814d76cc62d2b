//! End-to-end helpers shared by the command line and the bindings.

use serde::{Deserialize, Serialize};

use crate::analysis::{bifurcation_energy, BifurcationEstimate};
use crate::error::Result;
use crate::model::{complexify_nonresonant, prepare_resonant, PotentialSpec, PreparedHamiltonian};
use crate::normform::normalize;

/// Order of the nonresonant normal form used to locate a resonance before
/// building the resonant one.
pub const DEFAULT_BIFURCATION_ORDER: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ModeRequest {
    Nonresonant,
    Resonant {
        m1: u32,
        m2: u32,
        /// Nonresonant order used for `I1*`, `omega1*`, `omega2*`.
        bifurcation_order: u32,
    },
}

/// Builds the Hamiltonian to normalize. In resonant mode the nonresonant
/// form is first computed to `bifurcation_order`, the `m2:m1` bifurcation
/// is located on it and the resonant Hamiltonian is prepared there.
pub fn prepare(
    potential: &PotentialSpec,
    request: ModeRequest,
    r_trunc: u32,
) -> Result<(PreparedHamiltonian, Option<BifurcationEstimate>)> {
    match request {
        ModeRequest::Nonresonant => Ok((complexify_nonresonant(potential, r_trunc)?, None)),
        ModeRequest::Resonant {
            m1,
            m2,
            bifurcation_order,
        } => {
            let order = bifurcation_order.max(2);
            let base = complexify_nonresonant(potential, order)?;
            let state = normalize(&base, order, order)?;
            let est = bifurcation_energy(&state, m1, m2)?;
            let prepared = prepare_resonant(potential, m1, m2, est.action, est.omega1, est.omega2, r_trunc)?;
            Ok((prepared, Some(est)))
        }
    }
}
