//! Birkhoff-type normal forms and formal integrals for axisymmetric
//! magnetic-bottle Hamiltonians, with the numerical tools needed to check them.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod invariants;
pub mod model;
pub mod normform;
pub mod parse;
pub mod pipeline;
pub mod poly;

pub use error::{Error, Result};
pub use invariants::{back_transform, FormalIntegral};
pub use model::{Mode, PotentialSpec, PreparedHamiltonian, ResonanceParams};
pub use normform::{normalize, KernelSet, NormalizationState};
pub use pipeline::{prepare, ModeRequest};
pub use poly::{CanonicalPolynomial, Direction, ExponentKey, GradedTerm};
