//! Optimal retrieval for a single qubit with the maximally mixed prior.
//!
//! With `pi = 1/2` a qubit map `r -> T r + t` composed after `Phi` (Bloch data
//! `T, t`) gives a composite with Bloch matrix `M = T_r T` and no
//! translation once `t_r = -T_r t`. The detailed-balance axiom is then `M`
//! symmetric and the spectral axiom `M >= 0`. Writing `T_r = M T^{-1}`, the
//! Choi matrix of the retrieval is affine in `M`, so maximizing
//! `ln det M` subject to a positive semidefinite Choi matrix is a convex
//! log-det problem in the six entries of `M`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::axioms::petz_map;
use super::channels::{bloch_channel, pauli_transfer};
use super::{DensityMatrix, Superoperator, C64};
use crate::error::{Error, Result};
use crate::linalg;

pub const STARTS: usize = 32;
const MU_START: f64 = 1.0;
const MU_END: f64 = 1e-10;
const MU_FACTOR: f64 = 0.2;
const MAX_NEWTON: usize = 500;
const DECREMENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct QubitRetrieval {
    pub map: Superoperator,
    /// `det` of the composed superoperator, equal to `det M`.
    pub determinant: f64,
    pub petz_determinant: f64,
    pub best_start: usize,
}

const SYM_INDEX: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

fn sym_basis(k: usize) -> Matrix3<f64> {
    let (i, j) = SYM_INDEX[k];
    let mut e = Matrix3::zeros();
    e[(i, j)] = 1.0;
    e[(j, i)] = 1.0;
    e
}

fn to_sym(m: &[f64; 6]) -> Matrix3<f64> {
    let mut out = Matrix3::zeros();
    for (k, &(i, j)) in SYM_INDEX.iter().enumerate() {
        out[(i, j)] = m[k];
        out[(j, i)] = m[k];
    }
    out
}

fn from_sym(m: &Matrix3<f64>) -> [f64; 6] {
    let mut out = [0.0; 6];
    for (k, &(i, j)) in SYM_INDEX.iter().enumerate() {
        out[k] = 0.5 * (m[(i, j)] + m[(j, i)]);
    }
    out
}

struct Problem {
    t_inv: Matrix3<f64>,
    t_vec: Vector3<f64>,
    choi0: DMatrix<C64>,
    choi_dirs: Vec<DMatrix<C64>>,
}

impl Problem {
    fn retrieval(&self, m: &[f64; 6]) -> Superoperator {
        let tr = to_sym(m) * self.t_inv;
        bloch_channel(&tr, &(-(tr * self.t_vec)))
    }

    fn choi(&self, m: &[f64; 6]) -> DMatrix<C64> {
        let mut c = self.choi0.clone();
        for (k, d) in self.choi_dirs.iter().enumerate() {
            c += d * C64::new(m[k], 0.0);
        }
        linalg::hermitian_part(&c)
    }

    fn objective(&self, m: &[f64; 6], mu: f64) -> Option<f64> {
        let bloch = to_sym(m);
        let chol = bloch.cholesky()?;
        let log_det_m: f64 = (0..3).map(|i| 2.0 * chol.l()[(i, i)].ln()).sum();
        let c = self.choi(m);
        let ev = linalg::hermitian_eigenvalues(&c);
        if ev[0] <= 0.0 {
            return None;
        }
        let log_det_c: f64 = ev.iter().map(|v| v.ln()).sum();
        Some(-log_det_m - mu * log_det_c)
    }

    fn newton(&self, m: &mut [f64; 6], mu: f64) -> Result<()> {
        for _ in 0..MAX_NEWTON {
            let bloch_inv = to_sym(m)
                .try_inverse()
                .ok_or_else(|| Error::Singular("composite Bloch matrix lost invertibility".into()))?;
            let c = self.choi(m);
            let c_inv = c
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::Singular("Choi matrix lost invertibility".into()))?;
            let wm: Vec<Matrix3<f64>> = (0..6).map(|k| bloch_inv * sym_basis(k)).collect();
            let wc: Vec<DMatrix<C64>> = self.choi_dirs.iter().map(|d| &c_inv * d).collect();
            let mut grad = DVector::zeros(6);
            let mut hess = DMatrix::zeros(6, 6);
            for k in 0..6 {
                grad[k] = -wm[k].trace() - mu * wc[k].trace().re;
                for l in 0..=k {
                    let v = (wm[k] * wm[l]).trace() + mu * (&wc[k] * &wc[l]).trace().re;
                    hess[(k, l)] = v;
                    hess[(l, k)] = v;
                }
            }
            let chol = nalgebra::Cholesky::new(hess.clone())
                .or_else(|| nalgebra::Cholesky::new(hess.clone() + DMatrix::identity(6, 6) * 1e-14 * hess.trace()))
                .ok_or_else(|| Error::Singular("qubit Newton system is not positive definite".into()))?;
            let dz = -chol.solve(&grad);
            let decrement = -grad.dot(&dz);
            if decrement / 2.0 <= DECREMENT_TOL {
                return Ok(());
            }
            let f0 = self.objective(m, mu).ok_or_else(|| Error::Singular("infeasible iterate".into()))?;
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..80 {
                let trial: [f64; 6] = std::array::from_fn(|k| m[k] + t * dz[k]);
                if let Some(f) = self.objective(&trial, mu) {
                    if f <= f0 - 0.25 * t * decrement {
                        *m = trial;
                        moved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !moved {
                return Ok(());
            }
        }
        Err(Error::NonConvergence { solver: "qubit determinant barrier".into(), iterations: MAX_NEWTON })
    }

    fn solve_from(&self, mut m: [f64; 6]) -> Result<[f64; 6]> {
        let mut mu = MU_START;
        loop {
            self.newton(&mut m, mu)?;
            if mu <= MU_END {
                return Ok(m);
            }
            mu *= MU_FACTOR;
        }
    }
}

/// Determinant-maximizing retrieval for a qubit channel with prior `1/2`.
/// Falls back to the Petz map when the forward Bloch matrix is singular
/// (every retrieval then has zero determinant).
pub fn qubit_optimal_retrieval(phi: &Superoperator, seed: u64) -> Result<QubitRetrieval> {
    if phi.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: phi.dim() });
    }
    let pi = DensityMatrix::maximally_mixed(2);
    let petz = petz_map(phi, &pi)?;
    let petz_determinant = petz.compose(phi).determinant().re;
    let (t_mat, t_vec) = pauli_transfer(phi);
    let Some(t_inv) = t_mat.try_inverse().filter(|_| t_mat.determinant().abs() > 1e-12) else {
        return Ok(QubitRetrieval { map: petz, determinant: petz_determinant, petz_determinant, best_start: 0 });
    };

    let zero = [0.0; 6];
    let mut problem = Problem { t_inv, t_vec, choi0: DMatrix::zeros(4, 4), choi_dirs: Vec::new() };
    problem.choi0 = problem.retrieval(&zero).choi();
    problem.choi_dirs = (0..6)
        .map(|k| {
            let mut e = [0.0; 6];
            e[k] = 1.0;
            problem.retrieval(&e).choi() - &problem.choi0
        })
        .collect();

    let (petz_t, _) = pauli_transfer(&petz);
    let m_petz = from_sym(&(petz_t * t_mat));
    let interior: [f64; 6] = std::array::from_fn(|k| (1.0 - 1e-3) * m_petz[k]);
    if problem.objective(&interior, 1.0).is_none() {
        return Err(Error::Infeasible {
            what: "Petz composite is not strictly feasible".into(),
            residual: f64::NAN,
            tol: 0.0,
        });
    }

    let starts: Vec<[f64; 6]> = (0..STARTS)
        .map(|s| {
            if s == 0 {
                return interior;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(s as u64));
            let a = Matrix3::from_fn(|_, _| rng.random::<f64>() - 0.5);
            let target = from_sym(&(a * a.transpose() + Matrix3::identity() * 0.1));
            let mut w = 0.5;
            while w > 1e-6 {
                let trial: [f64; 6] = std::array::from_fn(|k| (1.0 - w) * interior[k] + w * target[k]);
                if problem.objective(&trial, 1.0).is_some() {
                    return trial;
                }
                w *= 0.5;
            }
            interior
        })
        .collect();

    let solved: Vec<Option<(f64, [f64; 6])>> = starts
        .par_iter()
        .map(|start| {
            let m = problem.solve_from(*start).ok()?;
            Some((to_sym(&m).determinant(), m))
        })
        .collect();
    let (best_start, (determinant, m)) = solved
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|v| (i, v)))
        .fold(None, |acc: Option<(usize, (f64, [f64; 6]))>, cur| match acc {
            Some(a) if a.1 .0 >= cur.1 .0 => Some(a),
            _ => Some(cur),
        })
        .ok_or_else(|| Error::NonConvergence { solver: "qubit multi-start search".into(), iterations: STARTS })?;

    if determinant < petz_determinant {
        return Ok(QubitRetrieval { map: petz, determinant: petz_determinant, petz_determinant, best_start });
    }
    Ok(QubitRetrieval { map: problem.retrieval(&m), determinant, petz_determinant, best_start })
}

/// Bloch-ball volume ratio `|det T|` of a qubit map.
pub fn bloch_volume_ratio(s: &Superoperator) -> f64 {
    pauli_transfer(s).0.determinant().abs()
}

#[derive(Debug, Clone, Serialize)]
pub struct BlochSummary {
    pub linear: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

pub fn bloch_summary(s: &Superoperator) -> BlochSummary {
    let (t, v) = pauli_transfer(s);
    BlochSummary {
        linear: std::array::from_fn(|i| std::array::from_fn(|j| t[(i, j)])),
        translation: [v[0], v[1], v[2]],
    }
}
