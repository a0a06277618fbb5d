//! Quantum retrieval: density matrices, superoperators in column-stacking
//! form, the Petz map, the quantum axioms, two case-study channels and a
//! qubit-specialized optimal search.
//!
//! A superoperator on `d x d` matrices is stored as its `d^2 x d^2` matrix
//! acting on `vec(X)`, where `vec` stacks columns, so
//! `vec(A X B) = (B^T kron A) vec(X)`.

pub mod axioms;
pub mod channels;
pub mod contrast;
pub mod figures;
pub mod qubit;
pub mod state;
pub mod superop;

pub use axioms::{check_quantum_axioms, petz_map, theorem_conditions, QuantumAxiomReport};
pub use state::DensityMatrix;
pub use superop::Superoperator;

pub use crate::linalg::C64;
