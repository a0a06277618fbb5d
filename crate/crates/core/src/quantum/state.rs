use nalgebra::DMatrix;

use super::C64;
use crate::error::{Error, Result};
use crate::linalg;
use crate::tol;

/// A full-rank density matrix: Hermitian, unit trace, eigenvalues above the
/// positivity floor.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        let herm = linalg::max_anti_hermitian(&m);
        if herm > tol::CHECK {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let trace = m.trace();
        if (trace.re - 1.0).abs() > tol::CHECK || trace.im.abs() > tol::CHECK {
            return Err(Error::InvalidState(format!("trace {trace} is not 1")));
        }
        let m = linalg::hermitian_part(&m);
        let min = linalg::hermitian_eigenvalues(&m)[0];
        if min < tol::POSITIVITY_FLOOR {
            return Err(Error::InvalidState(format!(
                "smallest eigenvalue {min:e} is below the positivity floor {:e}",
                tol::POSITIVITY_FLOOR
            )));
        }
        Ok(Self { m })
    }

    pub fn diagonal(p: &[f64]) -> Result<Self> {
        let n = p.len();
        Self::new(DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(p[i], 0.0) } else { C64::new(0.0, 0.0) }))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { m: DMatrix::identity(d, d) * C64::new(1.0 / d as f64, 0.0) }
    }

    /// `(1 + x X + y Y + z Z) / 2`; requires a point strictly inside the Bloch ball.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        Self::new(bloch_operator(r))
    }

    /// Gibbs state of `H = epsilon |1><1|` at inverse temperature `beta`:
    /// `diag(1, e^{-beta epsilon}) / Z`.
    pub fn gibbs_qubit(beta_epsilon: f64) -> Result<Self> {
        if !(0.0..=tol::MAX_BETA_EPSILON).contains(&beta_epsilon) {
            return Err(Error::OutOfRange {
                name: "beta*epsilon",
                value: beta_epsilon,
                lo: 0.0,
                hi: tol::MAX_BETA_EPSILON,
            });
        }
        let w = (-beta_epsilon).exp();
        Self::diagonal(&[1.0 / (1.0 + w), w / (1.0 + w)])
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        Self { m: self.m.kronecker(&other.m) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    /// `rho^s` through the spectral decomposition.
    pub fn power(&self, s: f64) -> DMatrix<C64> {
        linalg::hermitian_fn(&self.m, |x| x.powf(s))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.m)
    }
}

/// `(1 + r . sigma) / 2` without validation.
pub fn bloch_operator(r: [f64; 3]) -> DMatrix<C64> {
    let h = 0.5;
    DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(h * (1.0 + r[2]), 0.0),
            C64::new(h * r[0], -h * r[1]),
            C64::new(h * r[0], h * r[1]),
            C64::new(h * (1.0 - r[2]), 0.0),
        ],
    )
}

/// Bloch vector of a `2 x 2` Hermitian operator with unit trace.
pub fn bloch_vector(m: &DMatrix<C64>) -> [f64; 3] {
    [2.0 * m[(1, 0)].re, 2.0 * m[(1, 0)].im, (m[(0, 0)] - m[(1, 1)]).re]
}

/// `1/2 || a - b ||_1` for Hermitian arguments.
pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    0.5 * linalg::trace_norm_hermitian(&(a - b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bloch_round_trip() {
        let r = [0.1, -0.3, 0.5];
        let rho = DensityMatrix::from_bloch(r).unwrap();
        let back = bloch_vector(rho.matrix());
        for k in 0..3 {
            assert!((back[k] - r[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn pure_state_rejected() {
        assert!(DensityMatrix::from_bloch([0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn gibbs_populations() {
        let g = DensityMatrix::gibbs_qubit(1.0).unwrap();
        let e = (-1.0f64).exp();
        assert!((g.matrix()[(1, 1)].re - e / (1.0 + e)).abs() < 1e-15);
        assert!(DensityMatrix::gibbs_qubit(60.0).is_err());
    }

    #[test]
    fn trace_distance_of_orthogonal_bloch_points() {
        let a = bloch_operator([0.0, 0.0, 0.5]);
        let b = bloch_operator([0.0, 0.0, -0.5]);
        assert!((trace_distance(&a, &b) - 0.5).abs() < 1e-15);
    }
}
