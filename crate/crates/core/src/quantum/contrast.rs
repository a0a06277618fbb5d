//! The square-root quantum contrast and the determinant bounds stated with it.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{DensityMatrix, Superoperator, C64};
use crate::error::{Error, Result};
use crate::linalg;
use crate::quality::{BoundReport, LOCAL_ALLOWANCE};
use crate::random;
use crate::tol;

fn inv_sqrt(m: &DMatrix<C64>) -> Option<DMatrix<C64>> {
    let (values, _) = linalg::hermitian_eigen(m);
    if values[0] <= 0.0 {
        return None;
    }
    Some(linalg::hermitian_fn(m, |x| 1.0 / x.sqrt()))
}

/// `1/2 tr[ rho^{-1/2} (rho - sigma) sigma^{-1/2} (rho - sigma) ]`.
pub fn h_sq(rho: &DMatrix<C64>, sigma: &DMatrix<C64>) -> Result<f64> {
    let a = inv_sqrt(rho).ok_or_else(|| Error::InvalidState("first argument is not positive definite".into()))?;
    let b = inv_sqrt(sigma).ok_or_else(|| Error::InvalidState("second argument is not positive definite".into()))?;
    let diff = rho - sigma;
    Ok(0.5 * (a * &diff * b * &diff).trace().re)
}

/// `1/2 tr[ delta J_rho^{-1}(delta) ]`, the local form of [`h_sq`].
pub fn fisher_form(rho: &DMatrix<C64>, delta: &DMatrix<C64>) -> Result<f64> {
    let a = inv_sqrt(rho).ok_or_else(|| Error::InvalidState("state is not positive definite".into()))?;
    Ok(0.5 * (delta * &a * delta * &a).trace().re)
}

/// Random full-rank density matrices with a fixed seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DensitySampler {
    pub dim: usize,
    pub sample_count: usize,
    pub seed: u64,
}

impl DensitySampler {
    pub fn samples(&self) -> Vec<DMatrix<C64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.sample_count).map(|_| random::density_matrix(&mut rng, self.dim)).collect()
    }
}

fn log_inverse_determinant(m: &Superoperator) -> Result<f64> {
    let det = m.determinant();
    if det.im.abs() > tol::CHECK || det.re <= 0.0 {
        return Err(Error::InvalidInput(format!("composition determinant {det} is not positive")));
    }
    Ok(-det.re.ln())
}

/// Local bound at the prior with the square-root contrast, allowance
/// `10 |delta|_1^2 d`.
pub fn local_bound_report(
    retrieval: &Superoperator,
    phi: &Superoperator,
    pi: &DensityMatrix,
    delta: &DMatrix<C64>,
) -> Result<BoundReport> {
    let m = retrieval.compose(phi);
    let perturbed = pi.matrix() + delta;
    let lhs = h_sq(&perturbed, &m.apply(&perturbed))?;
    let rhs = 0.5 * h_sq(pi.matrix(), &perturbed)? * log_inverse_determinant(&m)?;
    let l1 = linalg::trace_norm_hermitian(delta);
    let slack = rhs - lhs;
    let allowance = LOCAL_ALLOWANCE * l1 * l1 * pi.dim() as f64;
    Ok(BoundReport { lhs, rhs, slack, allowance, holds: slack >= -allowance })
}

fn ratio(m: &Superoperator, rho: &DMatrix<C64>, sigma: &DMatrix<C64>) -> Option<f64> {
    let h = h_sq(rho, sigma).ok()?;
    if h < 1e-12 {
        return None;
    }
    let hm = h_sq(&m.apply(rho), &m.apply(sigma)).ok()?;
    Some((h - hm) / h)
}

/// Traceless Hermitian directions spanning the tangent space of states.
fn tangent_directions(d: usize) -> Vec<DMatrix<C64>> {
    let mut out = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let mut re = DMatrix::zeros(d, d);
            re[(i, j)] = C64::new(1.0, 0.0);
            re[(j, i)] = C64::new(1.0, 0.0);
            let mut im = DMatrix::zeros(d, d);
            im[(i, j)] = C64::new(0.0, -1.0);
            im[(j, i)] = C64::new(0.0, 1.0);
            out.push(re);
            out.push(im);
        }
        if i + 1 < d {
            let mut diag = DMatrix::zeros(d, d);
            diag[(i, i)] = C64::new(1.0, 0.0);
            diag[(i + 1, i + 1)] = C64::new(-1.0, 0.0);
            out.push(diag);
        }
    }
    out
}

/// Sampled infimum of the relative contraction of the square-root contrast,
/// refined by coordinate descent along traceless Hermitian directions.
pub fn contraction_bound_report(
    retrieval: &Superoperator,
    phi: &Superoperator,
    sampler: &DensitySampler,
) -> Result<BoundReport> {
    let m = retrieval.compose(phi);
    let doubled = DensitySampler { sample_count: 2 * sampler.sample_count, ..*sampler };
    let samples = doubled.samples();
    let scored: Vec<(f64, usize)> = samples
        .par_chunks(2)
        .enumerate()
        .filter_map(|(k, p)| ratio(&m, &p[0], &p[1]).map(|r| (r, k)))
        .collect();
    let (mut best, k) = scored
        .iter()
        .copied()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::InvalidInput("no usable sample pair".into()))?;
    let mut pair = [samples[2 * k].clone(), samples[2 * k + 1].clone()];
    let dirs = tangent_directions(sampler.dim);
    let mut step = 0.05;
    while step > 1e-6 {
        let mut improved = false;
        for which in 0..2 {
            for dir in &dirs {
                for sign in [1.0, -1.0] {
                    let mut trial = pair.clone();
                    trial[which] += dir * C64::new(sign * step, 0.0);
                    if linalg::hermitian_eigenvalues(&trial[which])[0] < 1e-9 {
                        continue;
                    }
                    if let Some(r) = ratio(&m, &trial[0], &trial[1]) {
                        if r < best {
                            best = r;
                            pair = trial;
                            improved = true;
                        }
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let rhs = 2.0 * log_inverse_determinant(&m)?;
    let slack = rhs - best;
    Ok(BoundReport { lhs: best, rhs, slack, allowance: tol::BOUND, holds: slack >= -tol::BOUND })
}
