//! Transportation polytopes `U(sigma, pi)`: nonnegative `n x n` matrices with
//! row sums `sigma` and column sums `pi`.
//!
//! Vertices are enumerated by repeatedly saturating one cell with the smaller
//! of its remaining row and column margins. Every vertex has a forest as its
//! support, so every vertex arises this way, and memoizing on the remaining
//! margins keeps the search tractable up to [`MAX_DIM`].

use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::stochastic::{DiagonalEmbedding, ProbabilityVector, StochasticMatrix};
use crate::tol;

/// Largest dimension accepted by [`enumerate_vertices`].
pub const MAX_DIM: usize = 8;

/// Remaining margins at or below this are treated as exhausted.
const MARGIN_EPS: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportationPolytope {
    sigma: ProbabilityVector,
    pi: ProbabilityVector,
    vertices: Vec<DMatrix<f64>>,
}

impl TransportationPolytope {
    /// Row-sum margin.
    pub fn sigma(&self) -> &ProbabilityVector {
        &self.sigma
    }

    /// Column-sum margin.
    pub fn pi(&self) -> &ProbabilityVector {
        &self.pi
    }

    pub fn dim(&self) -> usize {
        self.pi.dim()
    }

    pub fn vertices(&self) -> &[DMatrix<f64>] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Number of leading vertices of the form `P J_pi` with `P` a permutation.
    pub fn permutation_prefix_len(&self) -> usize {
        self.vertices.iter().take_while(|v| is_permutation_vertex(v, &self.pi)).count()
    }

    /// Same polytope with vertices listed in `order` (a permutation of indices).
    pub fn with_vertex_order(&self, order: &[usize]) -> Result<Self> {
        let k = self.vertex_count();
        let mut seen = vec![false; k];
        if order.len() != k || order.iter().any(|&i| i >= k || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::InvalidInput("vertex order is not a permutation".into()));
        }
        Ok(Self {
            sigma: self.sigma.clone(),
            pi: self.pi.clone(),
            vertices: order.iter().map(|&i| self.vertices[i].clone()).collect(),
        })
    }

    /// Membership test up to `tol` on signs and margins.
    pub fn contains(&self, l: &DMatrix<f64>, tol: f64) -> bool {
        let n = self.dim();
        l.shape() == (n, n)
            && l.iter().all(|&x| x >= -tol)
            && (0..n).all(|i| (l.row(i).sum() - self.sigma[i]).abs() <= tol)
            && (0..n).all(|j| (l.column(j).sum() - self.pi[j]).abs() <= tol)
    }
}

/// Convex weights over the vertices of a polytope.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct CoefficientVector {
    lambda: Vec<f64>,
}

impl CoefficientVector {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        for (index, &value) in lambda.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if value < -tol::NORM {
                return Err(Error::NegativeEntry { row: index, col: 0, value });
            }
        }
        let sum: f64 = lambda.iter().sum();
        if (sum - 1.0).abs() > tol::FIT {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self { lambda: lambda.into_iter().map(|x| x.max(0.0)).collect() })
    }

    /// All weight on vertex `k`.
    pub fn indicator(k: usize, len: usize) -> Self {
        let mut lambda = vec![0.0; len];
        lambda[k] = 1.0;
        Self { lambda }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lambda
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }
}

/// `V J_pi^{-1}` is a permutation matrix.
pub fn is_permutation_vertex(v: &DMatrix<f64>, pi: &ProbabilityVector) -> bool {
    let n = v.nrows();
    let scaled = v * DiagonalEmbedding::new(pi).inverse();
    let ones = |it: &mut dyn Iterator<Item = f64>| {
        let mut count = 0;
        for x in it {
            if (x - 1.0).abs() <= tol::CHECK {
                count += 1;
            } else if x.abs() > tol::CHECK {
                return false;
            }
        }
        count == 1
    };
    (0..n).all(|j| ones(&mut scaled.column(j).iter().copied()))
        && (0..n).all(|i| ones(&mut scaled.row(i).iter().copied()))
}

type Cells = Vec<(u8, u8, f64)>;

#[derive(Hash, PartialEq, Eq)]
struct StateKey {
    rows: u16,
    cols: u16,
    margins: Vec<u64>,
}

struct Enumerator {
    n: usize,
    memo: HashMap<StateKey, Rc<Vec<(u64, Cells)>>>,
}

impl Enumerator {
    fn solve(&mut self, rows: u16, cols: u16, r: &[f64], c: &[f64]) -> Rc<Vec<(u64, Cells)>> {
        if rows == 0 || cols == 0 {
            return Rc::new(vec![(0, Vec::new())]);
        }
        let n = self.n;
        let active = |mask: u16| (0..n).filter(move |&i| mask & (1 << i) != 0);
        let key = StateKey {
            rows,
            cols,
            margins: active(rows)
                .map(|i| r[i].to_bits())
                .chain(active(cols).map(|j| c[j].to_bits()))
                .collect(),
        };
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }

        let mut out: Vec<(u64, Cells)> = Vec::new();
        let mut supports = HashSet::new();
        for i in active(rows) {
            for j in active(cols) {
                let v = r[i].min(c[j]);
                let mut r2 = r.to_vec();
                let mut c2 = c.to_vec();
                r2[i] -= v;
                c2[j] -= v;
                let mut rows2 = rows;
                let mut cols2 = cols;
                if r2[i] <= MARGIN_EPS {
                    r2[i] = 0.0;
                    rows2 &= !(1 << i);
                }
                if c2[j] <= MARGIN_EPS {
                    c2[j] = 0.0;
                    cols2 &= !(1 << j);
                }
                let bit = 1u64 << (i * n + j);
                for (mask, cells) in self.solve(rows2, cols2, &r2, &c2).iter() {
                    let full = mask | bit;
                    if supports.insert(full) {
                        let mut cells = cells.clone();
                        cells.push((i as u8, j as u8, v));
                        out.push((full, cells));
                    }
                }
            }
        }
        let out = Rc::new(out);
        self.memo.insert(key, out.clone());
        out
    }
}

/// All vertices of `U(sigma, pi)` (row sums `sigma`, column sums `pi`),
/// deduplicated and listed permutation-type first, then lexicographically by
/// their row-major entries.
pub fn enumerate_vertices(
    sigma: &ProbabilityVector,
    pi: &ProbabilityVector,
) -> Result<TransportationPolytope> {
    let n = pi.dim();
    if sigma.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: sigma.dim() });
    }
    if n > MAX_DIM {
        return Err(Error::DimensionCap { dim: n, max: MAX_DIM });
    }
    let full: u16 = ((1u32 << n) - 1) as u16;
    let mut e = Enumerator { n, memo: HashMap::new() };
    let completions = e.solve(full, full, sigma.as_slice(), pi.as_slice());

    // A vertex is the only point of the polytope with its support, so
    // entries above the dedupe tolerance identify it.
    let mut seen = HashSet::new();
    let mut vertices: Vec<DMatrix<f64>> = Vec::with_capacity(completions.len());
    for (_, cells) in completions.iter() {
        let mut v = DMatrix::zeros(n, n);
        for &(i, j, x) in cells {
            v[(i as usize, j as usize)] += x;
        }
        let support = (0..n * n)
            .filter(|&k| v[(k / n, k % n)] > tol::DEDUPE)
            .fold(0u64, |acc, k| acc | (1 << k));
        if seen.insert(support) {
            vertices.push(v);
        }
    }
    if vertices.is_empty() {
        return Err(Error::InvalidInput("transportation polytope has no vertices".into()));
    }
    Ok(TransportationPolytope { sigma: sigma.clone(), pi: pi.clone(), vertices: canonical_order(vertices, pi) })
}

fn canonical_order(vertices: Vec<DMatrix<f64>>, pi: &ProbabilityVector) -> Vec<DMatrix<f64>> {
    let lex = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
        // Row-major comparison; nalgebra stores column-major.
        let (n, m) = a.shape();
        for i in 0..n {
            for j in 0..m {
                match a[(i, j)].total_cmp(&b[(i, j)]) {
                    std::cmp::Ordering::Equal => continue,
                    other => return other,
                }
            }
        }
        std::cmp::Ordering::Equal
    };
    let (mut perm, mut rest): (Vec<_>, Vec<_>) =
        vertices.into_iter().partition(|v| is_permutation_vertex(v, pi));
    perm.sort_by(lex);
    rest.sort_by(lex);
    perm.extend(rest);
    perm
}

/// Transposes every vertex: `U(sigma, pi)` becomes `U(pi, sigma)` with the
/// vertex order preserved.
pub fn vertex_transpose_dual(p: &TransportationPolytope) -> TransportationPolytope {
    TransportationPolytope {
        sigma: p.pi.clone(),
        pi: p.sigma.clone(),
        vertices: p.vertices.iter().map(|v| v.transpose()).collect(),
    }
}

/// `Psi = (sum_k lambda_k V_k) J_pi^{-1}`.
pub fn map_from_coefficients(
    lambda: &CoefficientVector,
    p: &TransportationPolytope,
) -> Result<StochasticMatrix> {
    if lambda.len() != p.vertex_count() {
        return Err(Error::DimensionMismatch { expected: p.vertex_count(), found: lambda.len() });
    }
    let n = p.dim();
    let mut l = DMatrix::zeros(n, n);
    for (w, v) in lambda.as_slice().iter().zip(&p.vertices) {
        l += v * *w;
    }
    StochasticMatrix::new(l * DiagonalEmbedding::new(&p.pi).inverse())
}

/// Recovers convex weights of `Psi J_pi` over the vertices of `p` by
/// nonnegative least squares. Fails when `Psi pi != sigma` or the fit residual
/// exceeds the fit tolerance.
pub fn coefficients_from_map(
    psi: &StochasticMatrix,
    p: &TransportationPolytope,
) -> Result<CoefficientVector> {
    let n = p.dim();
    if psi.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: psi.dim() });
    }
    let image = psi.as_matrix() * p.pi.to_dvector();
    let margin_gap = (0..n).map(|i| (image[i] - p.sigma[i]).abs()).fold(0.0, f64::max);
    if margin_gap > tol::FIT {
        return Err(Error::Infeasible {
            what: "map does not send the column margin to the row margin".into(),
            residual: margin_gap,
            tol: tol::FIT,
        });
    }
    let target = psi.as_matrix() * DiagonalEmbedding::new(&p.pi).matrix();
    let k = p.vertex_count();
    let rows = n * n + 1;
    let mut a = DMatrix::zeros(rows, k);
    let mut b = DVector::zeros(rows);
    for (col, v) in p.vertices.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                a[(i * n + j, col)] = v[(i, j)];
            }
        }
        a[(n * n, col)] = 1.0;
    }
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] = target[(i, j)];
        }
    }
    b[n * n] = 1.0;

    let x = linalg::nnls(&a, &b)?;
    let residual = (&a * &x - &b).amax();
    if residual > tol::FIT {
        return Err(Error::Infeasible {
            what: "map lies outside the convex hull of the vertices".into(),
            residual,
            tol: tol::FIT,
        });
    }
    let sum = x.sum();
    CoefficientVector::new(x.iter().map(|w| w / sum).collect())
}

/// The support graph (rows and columns as nodes) has no cycle.
pub fn support_is_acyclic(v: &DMatrix<f64>, zero_tol: f64) -> bool {
    let n = v.nrows();
    let mut parent: Vec<usize> = (0..2 * n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in 0..v.ncols() {
            if v[(i, j)] > zero_tol {
                let a = find(&mut parent, i);
                let b = find(&mut parent, n + j);
                if a == b {
                    return false;
                }
                parent[a] = b;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(x: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn uniform_margins_give_scaled_permutations() {
        for n in 2..=4 {
            let u = ProbabilityVector::uniform(n);
            let p = enumerate_vertices(&u, &u).unwrap();
            let fact: usize = (1..=n).product();
            assert_eq!(p.vertex_count(), fact);
            assert_eq!(p.permutation_prefix_len(), fact);
        }
    }

    #[test]
    fn two_state_vertices_match_hand_computation() {
        // Row sums (3/4, 1/4), column sums (1/2, 1/2).
        let p = enumerate_vertices(&pv(&[0.75, 0.25]), &pv(&[0.5, 0.5])).unwrap();
        assert_eq!(p.vertex_count(), 2);
        let a = DMatrix::from_row_slice(2, 2, &[0.25, 0.5, 0.25, 0.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.5, 0.25, 0.0, 0.25]);
        assert!(linalg::max_abs_diff(&p.vertices()[0], &a) < 1e-15);
        assert!(linalg::max_abs_diff(&p.vertices()[1], &b) < 1e-15);
        assert_eq!(p.permutation_prefix_len(), 0);
    }

    #[test]
    fn generic_three_state_counts() {
        let p = enumerate_vertices(&pv(&[0.3, 0.6, 0.1]), &pv(&[0.1, 0.2, 0.7])).unwrap();
        assert_eq!(p.vertex_count(), 10);
        for v in p.vertices() {
            assert!(p.contains(v, 1e-12));
            assert!(support_is_acyclic(v, 1e-15));
        }
    }

    #[test]
    fn coefficient_round_trip_on_vertex() {
        let p = enumerate_vertices(&pv(&[0.3, 0.6, 0.1]), &pv(&[0.1, 0.2, 0.7])).unwrap();
        for k in 0..p.vertex_count() {
            let psi = map_from_coefficients(&CoefficientVector::indicator(k, p.vertex_count()), &p).unwrap();
            let lambda = coefficients_from_map(&psi, &p).unwrap();
            let back = map_from_coefficients(&lambda, &p).unwrap();
            assert!(linalg::max_abs_diff(back.as_matrix(), psi.as_matrix()) < 1e-8);
        }
    }

    #[test]
    fn dimension_cap() {
        let u = ProbabilityVector::uniform(9);
        assert!(matches!(enumerate_vertices(&u, &u), Err(Error::DimensionCap { dim: 9, max: 8 })));
    }

    #[test]
    fn rejects_map_with_wrong_image() {
        let p = enumerate_vertices(&pv(&[0.75, 0.25]), &pv(&[0.5, 0.5])).unwrap();
        let id = StochasticMatrix::identity(2);
        assert!(matches!(coefficients_from_map(&id, &p), Err(Error::Infeasible { .. })));
    }
}
