use thiserror::Error;

/// Failures raised by the numerical routines.
///
/// Values are reported as `f64` regardless of the scalar type the failing
/// routine was instantiated with.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("model needs at least one level")]
    EmptyModel,
    #[error("levels {0} and {1} are closer than the distinctness threshold")]
    DuplicateEpsilon(usize, usize),
    #[error("coupling g must be nonzero")]
    ZeroCoupling,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid occupation: {0}")]
    InvalidOccupation(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("continuation stalled at g = {g_reached} (target {g_target})")]
    NoConvergence { g_reached: f64, g_target: f64 },
    #[error("state is not an eigenstate: quadratic residual {residual:e}")]
    NotAnEigenstate { residual: f64 },
    #[error("rapidity {index} sits on level {level}")]
    RapidityOnLevel { index: usize, level: usize },
    #[error("Lambda at level {level} has imaginary part {imag:e}")]
    NonRealLambda { level: usize, imag: f64 },
    #[error("rapidities {0} and {1} coincide")]
    CoincidingRapidities(usize, usize),
    #[error("polynomial reconstruction is ill-conditioned (residual {residual:e})")]
    IllConditioned { residual: f64 },
    #[error("Newton polish of root {index} diverged (residual {residual:e})")]
    PolishDiverged { index: usize, residual: f64 },
    #[error("evaluation point coincides with a pole")]
    PoleEvaluation,
    #[error("sum rule gives non-integer excitation count {0}")]
    SectorInconsistent(f64),
    #[error("size {size} exceeds the limit {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("wrong representation axis: {0}")]
    AxisMismatch(&'static str),
    #[error("site {site} out of range for {n} levels")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("rapidities are required for this form factor")]
    RapiditiesRequired,
    #[error("normalizing overlap vanishes ({0:e})")]
    ZeroOverlap(f64),
    #[error("generic Hamiltonian has near-degenerate levels (gap {0:e})")]
    DegenerateGeneric(f64),
    #[error("magnetic field must be nonzero")]
    ZeroField,
    #[error("couplings {0} and {1} coincide")]
    DegenerateCouplings(usize, usize),
    #[error("sector M = {m} has {got} states, expected {expected}")]
    IncompleteSector { m: usize, got: usize, expected: usize },
    #[error("spectral table is empty")]
    EmptyTable,
}

pub type Result<T> = std::result::Result<T, Error>;
