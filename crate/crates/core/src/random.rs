//! Seeded generators for random instances. All draws go through
//! [`ChaCha8Rng`], so a seed fixes every output bit-for-bit.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::linalg::{self, C64};
use crate::stochastic::{ProbabilityVector, StochasticMatrix};
use crate::tol;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from the open simplex; redraws until every entry clears the
/// positivity floor.
pub fn probability_vector<R: Rng>(rng: &mut R, n: usize) -> ProbabilityVector {
    loop {
        let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
        let sum: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|x| x / sum).collect();
        if p.iter().all(|&x| x >= tol::POSITIVITY_FLOOR) {
            if let Ok(v) = ProbabilityVector::new(p) {
                return v;
            }
        }
    }
}

/// Stochastic matrix with independent uniform columns.
pub fn stochastic_matrix<R: Rng>(rng: &mut R, n: usize) -> StochasticMatrix {
    let cols: Vec<ProbabilityVector> = (0..n).map(|_| probability_vector(rng, n)).collect();
    StochasticMatrix::new(DMatrix::from_fn(n, n, |i, j| cols[j][i])).expect("columns are normalized")
}

/// Random convex combination of permutation matrices (doubly stochastic).
pub fn doubly_stochastic_matrix<R: Rng>(rng: &mut R, n: usize, terms: usize) -> StochasticMatrix {
    let w = probability_vector(rng, terms);
    let mut m = DMatrix::zeros(n, n);
    for k in 0..terms {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        for (j, &p) in perm.iter().enumerate() {
            m[(p, j)] += w[k];
        }
    }
    // Renormalize columns to remove rounding drift.
    for j in 0..n {
        let s = m.column(j).sum();
        m.column_mut(j).iter_mut().for_each(|x| *x /= s);
    }
    StochasticMatrix::new(m).expect("convex combination of permutations")
}

pub fn complex_gaussian<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    })
}

/// Full-rank density matrix `G G^† / tr` from a square Ginibre matrix.
pub fn density_matrix<R: Rng>(rng: &mut R, d: usize) -> DMatrix<C64> {
    loop {
        let g = complex_gaussian(rng, d, d);
        let rho = &g * g.adjoint();
        let tr = rho.trace();
        let rho = rho / tr;
        if linalg::hermitian_eigenvalues(&rho)[0] >= 1e-6 {
            return linalg::hermitian_part(&rho);
        }
    }
}

/// Kraus operators of a random channel: an isometry `C^d -> C^{k d}` cut into
/// `k` blocks.
pub fn kraus_operators<R: Rng>(rng: &mut R, d: usize, k: usize) -> Vec<DMatrix<C64>> {
    let g = complex_gaussian(rng, k * d, d);
    let gram = g.adjoint() * &g;
    let inv_sqrt = linalg::hermitian_fn(&gram, |x| 1.0 / x.sqrt());
    let v = g * inv_sqrt;
    (0..k).map(|b| v.rows(b * d, d).into_owned()).collect()
}
