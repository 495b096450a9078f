use std::fmt;

use gaudin_core::io::InputError;
use gaudin_core::Error;

pub const INPUT: u8 = 1;
pub const NUMERICAL: u8 = 2;
pub const INTERNAL: u8 = 3;

/// A failed run, sorted by exit code.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Numerical(String),
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => INPUT,
            Failure::Numerical(_) => NUMERICAL,
            Failure::Internal(_) => INTERNAL,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Numerical(m) | Failure::Internal(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        use Error::*;
        let msg = e.to_string();
        match e {
            EmptyModel
            | DuplicateEpsilon(..)
            | ZeroCoupling
            | NonFinite(_)
            | LengthMismatch { .. }
            | InvalidOccupation(_)
            | InvalidConfig(_)
            | AxisMismatch(_)
            | SiteOutOfRange { .. }
            | RapiditiesRequired
            | TooLarge { .. }
            | ZeroField
            | DegenerateCouplings(..) => Failure::Input(msg),
            NoConvergence { .. }
            | NotAnEigenstate { .. }
            | RapidityOnLevel { .. }
            | NonRealLambda { .. }
            | CoincidingRapidities(..)
            | IllConditioned { .. }
            | PolishDiverged { .. }
            | PoleEvaluation
            | SectorInconsistent(_)
            | ZeroOverlap(_)
            | DegenerateGeneric(_)
            | IncompleteSector { .. }
            | EmptyTable => Failure::Numerical(msg),
        }
    }
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        match e {
            InputError::Json(j) => Failure::Input(format!("malformed JSON: {j}")),
            InputError::Invalid(e) => Failure::from(e),
        }
    }
}
