use thiserror::Error;

use crate::poly::ExponentKey;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("generator contains book-keeping order 0 terms; the Lie series would not terminate")]
    NonNilpotentGenerator,
    #[error("monomial degree {degree} exceeds the hard cap {cap}")]
    DegreeOverflow { degree: u32, cap: u32 },
    #[error("malformed polynomial JSON: {0}")]
    Json(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("non-polynomial expression at line {line}, column {column}: {message}")]
    NonPolynomial {
        line: usize,
        column: usize,
        message: String,
    },
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("MissingQuadraticError: the potential has no positive rho^2 term")]
    MissingQuadratic,
    #[error("InvalidFrequencyError: mirror frequency must be positive, got {0}")]
    InvalidFrequency(f64),
    #[error("the potential contains odd powers of rho (term rho^{rho} z^{z}); only even-in-rho potentials are supported")]
    OddInRho { rho: u32, z: u32 },
    #[error("the potential contains odd powers of z (term rho^{rho} z^{z}); book-keeping by degree needs even total degree")]
    OddInZ { rho: u32, z: u32 },
    #[error("the potential contains a term without rho (z^{z}); the potential must vanish on the axis")]
    PureAxialTerm { z: u32 },
    #[error("degree {0} of the potential is beyond the supported range")]
    DegreeTooHigh(u32),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Error)]
pub enum NormalFormError {
    #[error("InconsistentBlockError: block (k={k}, l={l}) has a non-zero top coefficient {value:e}")]
    InconsistentBlock { k: u32, l: u32, value: f64 },
    #[error("SmallDivisorError: divisor {divisor:e} for monomial {key} is below the floor {floor:e}")]
    SmallDivisor {
        key: ExponentKey,
        divisor: f64,
        floor: f64,
    },
    #[error("OrderOverflowError: r_max = {r_max} exceeds r_trunc = {r_trunc}")]
    OrderOverflow { r_max: u32, r_trunc: u32 },
    #[error("ModeError: {0}")]
    Mode(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Error)]
pub enum InvariantError {
    #[error("NonRealIntegralError: coefficient of {key} keeps imaginary part {imag:e}")]
    NonRealIntegral { key: ExponentKey, imag: f64 },
    #[error("SeedOutsideCZVError: seed (z={z}, pz={pz}) is not energetically allowed at E={energy}")]
    SeedOutsideCzv { z: f64, pz: f64, energy: f64 },
    #[error("invalid section request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("EscapeDetected: orbit left the box |rho|,|z| <= {bound} at t = {t}")]
    EscapeDetected { t: f64, bound: f64 },
    #[error("step size underflow at t = {0}")]
    StepSizeUnderflow(f64),
    #[error("maximum number of steps reached at t = {0}")]
    TooManySteps(f64),
    #[error("NoBifurcationInRange: no {m2}:{m1} resonance below the stability threshold")]
    NoBifurcationInRange { m1: u32, m2: u32 },
    #[error("energy {0} is outside (0, E_crit)")]
    EnergyOutOfRange(f64),
    #[error("seed (z={z}, pz={pz}) is not energetically allowed at E={energy}")]
    SeedNotAllowed { z: f64, pz: f64, energy: f64 },
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("RangeError: {0}")]
    Range(String),
    #[error("NoRootError: no sign change of m2*w1 - m1*w2 for {m2}:{m1} on [0, {i_max}]")]
    NoRoot { m1: u32, m2: u32, i_max: f64 },
    #[error("ModeError: {0}")]
    Mode(String),
    #[error(transparent)]
    NormalForm(#[from] NormalFormError),
}

/// Umbrella error used by the pipeline helpers and the command line.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    NormalForm(#[from] NormalFormError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl Error {
    /// Short error name reported by the command line.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Poly(PolyError::NonNilpotentGenerator) => "NonNilpotentGenerator",
            Error::Poly(_) => "PolyError",
            Error::Parse(ParseError::Syntax { .. }) => "ParseError",
            Error::Parse(ParseError::NonPolynomial { .. }) => "NonPolynomialError",
            Error::Model(ModelError::MissingQuadratic) => "MissingQuadraticError",
            Error::Model(ModelError::InvalidFrequency(_)) => "InvalidFrequencyError",
            Error::Model(ModelError::Parse(ParseError::Syntax { .. })) => "ParseError",
            Error::Model(ModelError::Parse(ParseError::NonPolynomial { .. })) => "NonPolynomialError",
            Error::Model(_) => "ModelError",
            Error::NormalForm(NormalFormError::InconsistentBlock { .. }) => "InconsistentBlockError",
            Error::NormalForm(NormalFormError::SmallDivisor { .. }) => "SmallDivisorError",
            Error::NormalForm(NormalFormError::OrderOverflow { .. }) => "OrderOverflowError",
            Error::NormalForm(NormalFormError::Mode(_)) => "ModeError",
            Error::NormalForm(NormalFormError::Poly(_)) => "PolyError",
            Error::Invariant(InvariantError::NonRealIntegral { .. }) => "NonRealIntegralError",
            Error::Invariant(InvariantError::SeedOutsideCzv { .. }) => "SeedOutsideCZVError",
            Error::Invariant(_) => "InvariantError",
            Error::Dynamics(DynamicsError::EscapeDetected { .. }) => "EscapeDetected",
            Error::Dynamics(DynamicsError::NoBifurcationInRange { .. }) => "NoBifurcationInRange",
            Error::Dynamics(_) => "DynamicsError",
            Error::Analysis(AnalysisError::Range(_)) => "RangeError",
            Error::Analysis(AnalysisError::NoRoot { .. }) => "NoRootError",
            Error::Analysis(AnalysisError::Mode(_)) => "ModeError",
            Error::Analysis(AnalysisError::NormalForm(_)) => "NormalFormError",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
