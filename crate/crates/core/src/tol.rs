//! Numerical tolerances shared across modules.

/// Smallest admissible entry of a probability vector.
pub const POSITIVITY_FLOOR: f64 = 1e-12;
/// Allowed deviation of a sum from one.
pub const NORM: f64 = 1e-12;
/// Default tolerance for boolean checks (axioms, detailed balance, spectra).
pub const CHECK: f64 = 1e-9;
/// Entrywise distance under which two vertices are considered equal.
pub const DEDUPE: f64 = 1e-10;
/// Residual allowed when recovering convex coefficients of a map.
pub const FIT: f64 = 1e-8;
/// Largest asymmetry accepted by the grid oracle.
pub const SYMMETRY: f64 = 1e-9;
/// Optimality tolerance reported by the determinant solver.
pub const OPTIMALITY: f64 = 1e-6;
/// Eigenvalue floor in the involution scan.
pub const PSD: f64 = 1e-10;
/// Slack allowed on sampled entropy bounds before standard errors.
pub const BOUND: f64 = 1e-8;
/// Relative objective change that stops the average-entropy minimizer.
pub const ARE: f64 = 1e-8;
/// Largest inverse temperature times energy gap accepted for Gibbs states.
pub const MAX_BETA_EPSILON: f64 = 50.0;
