//! Controlled bidirectional teleportation channels.
//!
//! Builds multi-qubit channels from a pair matrix of entangled states plus a
//! controller register, counts the admissible selections, and simulates the
//! teleportation, disclosure and dialogue protocols on a dense state vector.
//!
//! Core types are generic over the [`Real`] scalar (`f32` or `f64`); the
//! aliases below fix double precision.

pub mod bases;
pub mod catalog;
pub mod census;
pub mod channel;
pub mod protocol;
pub mod qstate;
pub mod scalar;

pub use bases::{BellKind, ControllerFamily, GhzLabel, Sign};
pub use catalog::RuleStatus;
pub use channel::{ChannelKind, PairSelection, QubitLayout, SelectionError};
pub use protocol::{ControlSides, PauliOp, Smo};
pub use qstate::QubitSet;
pub use scalar::Real;

pub type StateVector = qstate::StateVector<f64>;
pub type DensityMatrix = qstate::DensityMatrix<f64>;
pub type Operator = qstate::Operator<f64>;
pub type EntangledBasis = bases::EntangledBasis<f64>;
pub type ControllerBasis = bases::ControllerBasis<f64>;
pub type ChannelSpec = channel::ChannelSpec<f64>;
pub type CatalogEntry = catalog::CatalogEntry<f64>;

pub type StateVectorF32 = qstate::StateVector<f32>;
pub type ChannelSpecF32 = channel::ChannelSpec<f32>;

pub type Complex = num_complex::Complex<f64>;
