//! Simulator and compiler for a two-dimensional Margolus-partitioned quantum
//! cellular automaton that runs classically programmed quantum circuits.
//!
//! Two backends evolve the lattice: [`dense`] holds the full state vector,
//! [`factored`] tracks the torus state as a product of column registers. The
//! [`compiler`] turns logical circuits into program columns, and [`verify`]
//! cross-checks the backends against each other and against the circuit.
//!
//! Numerics are generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! double precision, which every stated tolerance assumes.

pub mod compiler;
pub mod dense;
pub mod error;
pub mod factored;
pub mod gatekit;
pub mod lattice;
pub mod scalar;
pub mod verify;

pub use error::{QcaError, Result};
pub use lattice::{LatticeSpec, Remainders, Topology};
pub use scalar::Real;

pub type Amplitude = num_complex::Complex<f64>;

pub type StateVector = dense::StateVector<f64>;
pub type FactoredState = factored::FactoredState<f64>;
pub type SmallUnitary = gatekit::SmallUnitary<f64>;
pub type ColumnAssignment = dense::ColumnAssignment<f64>;
pub type ReducedDensity = dense::ReducedDensity<f64>;

pub type StateVector32 = dense::StateVector<f32>;
pub type FactoredState32 = factored::FactoredState<f32>;
pub type SmallUnitary32 = gatekit::SmallUnitary<f32>;
pub type ColumnAssignment32 = dense::ColumnAssignment<f32>;
