//! Rational spin-1/2 Gaudin magnets in the variables `Λ(ε_i)`: eigenstates
//! from a quadratic system, overlaps and form factors as determinants, and
//! central-spin dynamics, with exact diagonalization as the reference.
//!
//! The numerical core is generic over the scalar type; the aliases below
//! fix it to `f64`.

// NaN must fail the tolerance tests, hence `!(x <= tol)`.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dd;
pub mod determinant;
pub mod dynamics;
pub mod ed;
pub mod error;
pub mod io;
pub mod lambda;
pub mod linalg;
pub mod model;
pub mod rapidity;
pub mod scalar;
pub mod verify;

pub use dd::Dd;
pub use error::{Error, Result};
pub use lambda::Axis;
pub use model::BasisOccupation;
pub use scalar::{Field, Real};

pub type Model = model::GaudinModel<f64>;
pub type State = lambda::LambdaState<f64>;
pub type Sector = lambda::SectorSolutions<f64>;
pub type Config = lambda::ContinuationConfig<f64>;
pub type Charges = model::ChargeEigenvalues<f64>;
pub type Rapidities = rapidity::RapiditySet<f64>;
pub type Matrix = linalg::DenseMatrix<f64>;
pub type CentralSpin = dynamics::CentralSpinParams<f64>;
pub type Table = dynamics::SpectralTable<f64>;
pub type Series = dynamics::TimeSeries<f64>;
