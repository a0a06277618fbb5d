//! Pairwise positivity scan over the vertices of the forward polytope.
//!
//! For vertices `V_i, V_j` of `U(phi pi, pi)` the scan tests
//!
//!   X_ij = J_pi^{-1/2} V_j^T J_{phi pi}^{-1} V_i J_pi^{-1/2}
//!   Y_ij = J_{phi pi}^{-1/2} V_i J_pi^{-1} V_j^T J_{phi pi}^{-1/2}
//!
//! for being symmetric positive semidefinite. A vertex index map `R` can only
//! carry the Bayes correspondence to another admissible retrieval if both
//! tests pass for every pair `(i, R(i))`; empirically only `R = identity`
//! survives on the off-diagonal of the joint table.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::polytope::{self, TransportationPolytope};
use crate::random;
use crate::stochastic::{DiagonalEmbedding, ProbabilityVector};

/// Reorders vertices so that permutation-type ones come first (each block
/// otherwise keeps its relative order) and returns their count.
pub fn order_vertices_permutations_first(p: &TransportationPolytope) -> (TransportationPolytope, usize) {
    let (perm, rest): (Vec<usize>, Vec<usize>) =
        (0..p.vertex_count()).partition(|&k| polytope::is_permutation_vertex(&p.vertices()[k], p.pi()));
    let ell = perm.len();
    let order: Vec<usize> = perm.into_iter().chain(rest).collect();
    (p.with_vertex_order(&order).expect("partition of indices is a permutation"), ell)
}

/// Symmetric within `1e-9` and smallest eigenvalue of the symmetric part at
/// least `-tol_psd`.
pub fn is_symmetric_psd(m: &DMatrix<f64>, tol_psd: f64) -> bool {
    linalg::max_asymmetry(m) <= crate::tol::CHECK && linalg::sym_eigenvalues(m)[0] >= -tol_psd
}

pub fn compute_x(p: &TransportationPolytope, i: usize, j: usize) -> DMatrix<f64> {
    let jp = DiagonalEmbedding::new(p.pi()).power(-0.5);
    let js = DiagonalEmbedding::new(p.sigma()).inverse();
    let v = p.vertices();
    &jp * v[j].transpose() * js * &v[i] * &jp
}

pub fn compute_y(p: &TransportationPolytope, i: usize, j: usize) -> DMatrix<f64> {
    let js = DiagonalEmbedding::new(p.sigma()).power(-0.5);
    let jp = DiagonalEmbedding::new(p.pi()).inverse();
    let v = p.vertices();
    &js * &v[i] * jp * v[j].transpose() * &js
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsdScan {
    pub vertex_count: usize,
    /// Leading permutation-type vertices.
    pub permutation_count: usize,
    pub x_psd: Vec<Vec<bool>>,
    pub y_psd: Vec<Vec<bool>>,
    pub joint_psd: Vec<Vec<bool>>,
}

impl PsdScan {
    fn off_diagonal(table: &[Vec<bool>]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, row) in table.iter().enumerate() {
            for (j, &b) in row.iter().enumerate() {
                if b && i != j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn x_off_diagonal(&self) -> Vec<(usize, usize)> {
        Self::off_diagonal(&self.x_psd)
    }

    pub fn y_off_diagonal(&self) -> Vec<(usize, usize)> {
        Self::off_diagonal(&self.y_psd)
    }

    pub fn joint_off_diagonal(&self) -> Vec<(usize, usize)> {
        Self::off_diagonal(&self.joint_psd)
    }

    pub fn diagonal_passes(&self) -> bool {
        (0..self.vertex_count).all(|i| self.joint_psd[i][i])
    }

    /// Every admissible index map read off the joint table is an involution
    /// fixing the permutation-type vertices: diagonal passes, and any
    /// off-diagonal pass is mutual and lies in the non-permutation block.
    pub fn observation_compliant(&self) -> bool {
        let ell = self.permutation_count;
        self.diagonal_passes()
            && self
                .joint_off_diagonal()
                .iter()
                .all(|&(i, j)| i >= ell && j >= ell && self.joint_psd[j][i])
    }
}

/// Runs the scan on `U(sigma, pi)` with `sigma = phi pi`.
pub fn psd_scan(pi: &ProbabilityVector, image_prior: &ProbabilityVector, tol_psd: f64) -> Result<PsdScan> {
    let p = polytope::enumerate_vertices(image_prior, pi)?;
    Ok(psd_scan_polytope(&p, tol_psd).0)
}

/// Scan of an explicit polytope; also returns the reordered polytope whose
/// indices the tables refer to.
pub fn psd_scan_polytope(p: &TransportationPolytope, tol_psd: f64) -> (PsdScan, TransportationPolytope) {
    let (p, ell) = order_vertices_permutations_first(p);
    let k = p.vertex_count();
    let rows: Vec<(Vec<bool>, Vec<bool>)> = (0..k)
        .into_par_iter()
        .map(|i| {
            let x = (0..k).map(|j| is_symmetric_psd(&compute_x(&p, i, j), tol_psd)).collect();
            let y = (0..k).map(|j| is_symmetric_psd(&compute_y(&p, i, j), tol_psd)).collect();
            (x, y)
        })
        .collect();
    let x_psd: Vec<Vec<bool>> = rows.iter().map(|r| r.0.clone()).collect();
    let y_psd: Vec<Vec<bool>> = rows.iter().map(|r| r.1.clone()).collect();
    let joint_psd = (0..k).map(|i| (0..k).map(|j| x_psd[i][j] && y_psd[i][j]).collect()).collect();
    (PsdScan { vertex_count: k, permutation_count: ell, x_psd, y_psd, joint_psd }, p)
}

/// A random instance whose joint table has an off-diagonal pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub trial: usize,
    pub pi: Vec<f64>,
    pub image_prior: Vec<f64>,
    pub joint_off_diagonal: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub dim: usize,
    pub trials: usize,
    pub seed: u64,
    pub counterexamples: Vec<Counterexample>,
}

/// Scans `trials` random margin pairs drawn uniformly from the simplex.
pub fn counterexample_search(dim: usize, trials: usize, seed: u64, tol_psd: f64) -> Result<SearchReport> {
    if dim < 2 {
        return Err(Error::InvalidInput("search dimension must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(ProbabilityVector, ProbabilityVector)> = (0..trials)
        .map(|_| (random::probability_vector(&mut rng, dim), random::probability_vector(&mut rng, dim)))
        .collect();
    let results: Vec<Option<Counterexample>> = pairs
        .par_iter()
        .enumerate()
        .map(|(trial, (pi, sigma))| {
            let scan = psd_scan(pi, sigma, tol_psd)?;
            let off = scan.joint_off_diagonal();
            Ok((!off.is_empty()).then(|| Counterexample {
                trial,
                pi: pi.as_slice().to_vec(),
                image_prior: sigma.as_slice().to_vec(),
                joint_off_diagonal: off,
            }))
        })
        .collect::<Result<_>>()?;
    Ok(SearchReport { dim, trials, seed, counterexamples: results.into_iter().flatten().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(x: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn three_state_scan() {
        let scan = psd_scan(&pv(&[0.1, 0.2, 0.7]), &pv(&[0.3, 0.6, 0.1]), 1e-10).unwrap();
        assert_eq!(scan.vertex_count, 10);
        assert_eq!(scan.permutation_count, 0);
        assert!(scan.diagonal_passes());
        assert!(scan.x_off_diagonal().is_empty());
        assert!(scan.y_off_diagonal().is_empty());
        assert!(scan.observation_compliant());
    }

    #[test]
    fn four_state_scan() {
        let scan = psd_scan(&pv(&[0.1, 0.6, 0.1, 0.2]), &pv(&[0.1, 0.2, 0.3, 0.4]), 1e-10).unwrap();
        assert_eq!(scan.vertex_count, 77);
        assert_eq!(scan.x_off_diagonal().len(), 16);
        assert_eq!(scan.y_off_diagonal().len(), 16);
        assert!(scan.joint_off_diagonal().is_empty());
        assert!(scan.diagonal_passes());
    }

    #[test]
    fn permutation_vertices_lead() {
        let u = ProbabilityVector::uniform(3);
        let p = polytope::enumerate_vertices(&u, &u).unwrap();
        let (q, ell) = order_vertices_permutations_first(&p);
        assert_eq!(ell, 6);
        assert_eq!(q.vertex_count(), 6);
    }
}
