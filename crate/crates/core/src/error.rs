use thiserror::Error;

use crate::lattice::Topology;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QcaError {
    #[error("lattice dimensions invalid: {0}")]
    InvalidLattice(String),

    #[error("{what} {value} out of range 0..{bound}")]
    OutOfRange {
        what: &'static str,
        value: usize,
        bound: usize,
    },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("{qubits} qubits exceed the dense limit of {limit}")]
    MemoryGuard { qubits: usize, limit: usize },

    #[error("operation unsupported on {0} topology")]
    UnsupportedTopology(Topology),

    #[error("compile error: {0}")]
    Compile(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, QcaError>;
