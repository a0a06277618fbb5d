//! Channels used by the case studies, and the Bloch (Pauli-transfer)
//! parametrization of qubit maps.

use nalgebra::{DMatrix, Matrix3, Vector3};

use super::superop::{vec, Superoperator};
use super::{DensityMatrix, C64};
use crate::error::{Error, Result};

/// `X -> (1 - eta) X + eta tr(X) 1/d`; completely positive for
/// `0 <= eta <= d^2 / (d^2 - 1)`.
pub fn depolarizing(eta: f64, d: usize) -> Result<Superoperator> {
    if d < 2 {
        return Err(Error::InvalidInput(format!("depolarizing channel needs d >= 2, got {d}")));
    }
    let d2 = (d * d) as f64;
    let hi = d2 / (d2 - 1.0);
    if !(0.0..=hi).contains(&eta) {
        return Err(Error::OutOfRange { name: "eta", value: eta, lo: 0.0, hi });
    }
    let one = vec(&DMatrix::identity(d, d));
    let m = DMatrix::identity(d * d, d * d) * C64::new(1.0 - eta, 0.0)
        + &one * one.transpose() * C64::new(eta / d as f64, 0.0);
    Superoperator::from_matrix(d, m)
}

/// `X -> (1 - lambda) X + lambda tr(X) gamma`.
pub fn thermalizing(lambda: f64, gamma: &DensityMatrix) -> Result<Superoperator> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::OutOfRange { name: "lambda", value: lambda, lo: 0.0, hi: 1.0 });
    }
    let d = gamma.dim();
    let one = vec(&DMatrix::identity(d, d));
    let m = DMatrix::identity(d * d, d * d) * C64::new(1.0 - lambda, 0.0)
        + vec(gamma.matrix()) * one.transpose() * C64::new(lambda, 0.0);
    Superoperator::from_matrix(d, m)
}

/// Exchange of the two factors of `C^d kron C^d`.
pub fn swap(d: usize) -> Superoperator {
    let n = d * d;
    let mut u = DMatrix::zeros(n, n);
    for a in 0..d {
        for b in 0..d {
            u[(b * d + a, a * d + b)] = C64::new(1.0, 0.0);
        }
    }
    Superoperator::unitary(&u).expect("square permutation unitary")
}

/// `A kron B -> theta_{lambda1}(B) kron theta_{lambda2}(A)`, both factors
/// relaxing towards the Gibbs state of `H = epsilon |1><1|`.
pub fn thermal_swap(lambda1: f64, lambda2: f64, beta_epsilon: f64) -> Result<Superoperator> {
    let gamma = DensityMatrix::gibbs_qubit(beta_epsilon)?;
    let local = thermalizing(lambda1, &gamma)?.tensor(&thermalizing(lambda2, &gamma)?);
    Ok(local.compose(&swap(2)))
}

/// Prior of the thermal-swap case study: the product Gibbs state.
pub fn thermal_swap_prior(beta_epsilon: f64) -> Result<DensityMatrix> {
    let gamma = DensityMatrix::gibbs_qubit(beta_epsilon)?;
    Ok(gamma.kron(&gamma))
}

pub fn pauli(k: usize) -> DMatrix<C64> {
    let (z, o, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    match k {
        0 => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        1 => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        2 => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        3 => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("Pauli index {k} out of range"),
    }
}

/// Qubit map `r -> T r + t` on Bloch vectors, extended linearly (trace
/// preserving by construction).
pub fn bloch_channel(t_mat: &Matrix3<f64>, t_vec: &Vector3<f64>) -> Superoperator {
    Superoperator::from_fn(2, |x| {
        let x0 = x.trace();
        let xs: Vec<C64> = (1..4).map(|k| (pauli(k) * x).trace()).collect();
        let mut out = pauli(0) * x0;
        for i in 0..3 {
            let mut coeff = x0 * t_vec[i];
            for k in 0..3 {
                coeff += xs[k] * t_mat[(i, k)];
            }
            out += pauli(i + 1) * coeff;
        }
        out * C64::new(0.5, 0.0)
    })
}

/// `(T, t)` of a trace-preserving qubit map; imaginary parts are dropped.
pub fn pauli_transfer(s: &Superoperator) -> (Matrix3<f64>, Vector3<f64>) {
    let r = |i: usize, j: usize| 0.5 * (pauli(i) * s.apply(&pauli(j))).trace().re;
    (Matrix3::from_fn(|i, j| r(i + 1, j + 1)), Vector3::from_fn(|i, _| r(i + 1, 0)))
}

/// Isotropic compression by `c` followed by a shift `tau` along z.
pub fn translation_compression(compression: f64, translation: f64) -> Superoperator {
    bloch_channel(&(Matrix3::identity() * compression), &Vector3::new(0.0, 0.0, translation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn depolarizing_spectrum() {
        let s = depolarizing(0.3, 3).unwrap();
        let mut ev: Vec<f64> = s.eigenvalues().unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        assert!(ev[..8].iter().all(|v| (v - 0.7).abs() < 1e-12));
        assert!((ev[8] - 1.0).abs() < 1e-12);
        assert!(depolarizing(1.4, 2).is_err());
        assert!(depolarizing(4.0 / 3.0, 2).is_ok());
    }

    #[test]
    fn thermal_swap_exchanges_and_relaxes() {
        let phi = thermal_swap(0.3, 0.6, 1.0).unwrap();
        let gamma = DensityMatrix::gibbs_qubit(1.0).unwrap();
        let theta1 = thermalizing(0.3, &gamma).unwrap();
        let theta2 = thermalizing(0.6, &gamma).unwrap();
        let a = super::super::state::bloch_operator([0.2, 0.1, 0.4]);
        let b = super::super::state::bloch_operator([-0.3, 0.0, 0.1]);
        let lhs = phi.apply(&a.kronecker(&b));
        let rhs = theta1.apply(&b).kronecker(&theta2.apply(&a));
        assert!(linalg::max_abs_diff_c(&lhs, &rhs) < 1e-15);
    }

    #[test]
    fn pauli_transfer_round_trip() {
        let t = Matrix3::new(0.5, 0.1, 0.0, -0.1, 0.4, 0.05, 0.0, 0.02, 0.3);
        let v = Vector3::new(0.1, -0.05, 0.2);
        let (t2, v2) = pauli_transfer(&bloch_channel(&t, &v));
        assert!((t - t2).amax() < 1e-15 && (v - v2).amax() < 1e-15);
    }
}
