//! Reverse maps for classical stochastic matrices and small quantum channels.
//!
//! Stochastic matrices are left-stochastic: entry `(i, j)` is the probability
//! of output `i` given input `j`, and distributions are column vectors. A
//! retrieval map for a forward map `phi` and prior `pi` is any stochastic
//! matrix `r` such that `r * phi` fixes `pi`, is detailed balanced with respect
//! to `pi`, and has a nonnegative spectrum. The Bayes reverse is one such map;
//! [`retrieval::optimal_retrieval`] finds the one whose composition with `phi`
//! has the largest determinant.
//!
//! The quantum counterparts live in [`quantum`], with the Petz map in place of
//! the Bayes reverse.

pub mod error;
pub mod involution;
pub mod linalg;
pub mod polytope;
pub mod quality;
pub mod quantum;
pub mod random;
pub mod retrieval;
pub mod stochastic;
pub mod tol;

pub use error::{Error, Result};
pub use polytope::{CoefficientVector, TransportationPolytope};
pub use retrieval::{AxiomReport, RetrievalProblem};
pub use stochastic::{DiagonalEmbedding, ProbabilityVector, StochasticMatrix};
