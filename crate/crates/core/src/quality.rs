//! How well a retrieval map recovers states: recovery curves, sampled averages,
//! the determinant bounds on those quantities, and the map minimizing the
//! average recovery error directly.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::random;
use crate::stochastic::{self, ProbabilityVector, StochasticMatrix};
use crate::tol;

/// Uniform (flat Dirichlet) draws on the open simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimplexSampler {
    pub dim: usize,
    pub sample_count: usize,
    pub seed: u64,
}

impl SimplexSampler {
    pub fn new(dim: usize, sample_count: usize, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidInput(format!("sampler dimension {dim} must be at least 2")));
        }
        if sample_count == 0 {
            return Err(Error::InvalidInput("sample count must be positive".into()));
        }
        Ok(Self { dim, sample_count, seed })
    }

    pub fn samples(&self) -> Vec<ProbabilityVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.sample_count).map(|_| random::probability_vector(&mut rng, self.dim)).collect()
    }
}

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
}

impl McEstimate {
    fn from_values(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { mean, std_error: (var / n).sqrt() }
    }
}

/// `(k / (points + 1), 1 - k / (points + 1))` for `k = 1..=points`.
pub fn two_state_grid(points: usize) -> Vec<ProbabilityVector> {
    let denom = (points + 1) as f64;
    (1..=points)
        .map(|k| {
            let x = k as f64 / denom;
            ProbabilityVector::new(vec![x, 1.0 - x]).expect("interior grid point")
        })
        .collect()
}

/// Interior points `(a, b, c) / resolution` of the 3-simplex with positive
/// integer coordinates.
pub fn three_state_grid(resolution: usize) -> Vec<ProbabilityVector> {
    let mut out = Vec::new();
    let r = resolution as f64;
    for a in 1..resolution {
        for b in 1..(resolution - a) {
            let c = resolution - a - b;
            out.push(
                ProbabilityVector::normalized(vec![a as f64 / r, b as f64 / r, c as f64 / r])
                    .expect("interior grid point"),
            );
        }
    }
    out
}

/// `D(rho || retrieval phi rho)`.
pub fn recovery_relative_entropy(
    retrieval: &StochasticMatrix,
    phi: &StochasticMatrix,
    rho: &ProbabilityVector,
) -> Result<f64> {
    let out = retrieval.as_matrix() * (phi.as_matrix() * rho.to_dvector());
    stochastic::relative_entropy_slices(rho.as_slice(), out.as_slice())
}

/// Recovery error at every grid point.
pub fn recovery_curve(
    retrieval: &StochasticMatrix,
    phi: &StochasticMatrix,
    grid: &[ProbabilityVector],
) -> Result<Vec<f64>> {
    grid.iter().map(|rho| recovery_relative_entropy(retrieval, phi, rho)).collect()
}

pub fn average_recovery_error(
    retrieval: &StochasticMatrix,
    phi: &StochasticMatrix,
    sampler: &SimplexSampler,
) -> Result<McEstimate> {
    let samples = sampler.samples();
    let values: Vec<f64> = samples
        .par_iter()
        .map(|rho| recovery_relative_entropy(retrieval, phi, rho))
        .collect::<Result<_>>()?;
    Ok(McEstimate::from_values(&values))
}

/// `D(identity || retrieval phi)`, which for a positive spectrum equals
/// `-ln det(retrieval phi)`.
pub fn identity_relative_entropy(retrieval: &StochasticMatrix, phi: &StochasticMatrix) -> Result<f64> {
    let m = retrieval.as_matrix() * phi.as_matrix();
    let eig = linalg::real_matrix_eigenvalues(&m)?;
    let mut total = 0.0;
    for z in eig {
        if z.im.abs() > tol::CHECK || z.re <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "composition has eigenvalue {z} off the positive real axis"
            )));
        }
        total -= z.re.ln();
    }
    Ok(total)
}

/// Closed-form volume constant `K = -E[sum_i ln rho_i]` under the flat
/// measure on the `n`-simplex: `n * H_{n-1}`.
pub fn volume_constant(dim: usize) -> f64 {
    dim as f64 * harmonic(dim - 1)
}

/// Closed-form mean Shannon entropy under the flat measure: `H_n - 1`.
pub fn mean_entropy(dim: usize) -> f64 {
    harmonic(dim) - 1.0
}

fn harmonic(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

/// A checked inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    /// Violation tolerated before `holds` turns false.
    pub allowance: f64,
    pub holds: bool,
}

impl BoundReport {
    fn new(lhs: f64, rhs: f64, allowance: f64) -> Self {
        let slack = rhs - lhs;
        Self { lhs, rhs, slack, allowance, holds: slack >= -allowance }
    }
}

/// Average recovery error against `K / |det| - <S>`, with `K` and `<S>`
/// estimated on the same samples. The allowance is the bound tolerance plus
/// three standard errors of the per-sample slack.
pub fn determinant_bound_report(
    retrieval: &StochasticMatrix,
    phi: &StochasticMatrix,
    sampler: &SimplexSampler,
) -> Result<BoundReport> {
    let m = retrieval.compose(phi);
    let det = m.determinant().abs();
    if det < tol::CHECK {
        return Err(Error::Singular(format!("determinant {det:e} makes the bound vacuous")));
    }
    let samples = sampler.samples();
    let terms: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|rho| {
            let d = recovery_relative_entropy(retrieval, phi, rho)?;
            let bound = rho.neg_log_sum() / det - rho.entropy();
            Ok((d, bound))
        })
        .collect::<Result<_>>()?;
    let lhs: Vec<f64> = terms.iter().map(|t| t.0).collect();
    let slack: Vec<f64> = terms.iter().map(|t| t.1 - t.0).collect();
    let lhs = McEstimate::from_values(&lhs);
    let slack = McEstimate::from_values(&slack);
    Ok(BoundReport::new(lhs.mean, lhs.mean + slack.mean, tol::BOUND + 3.0 * slack.std_error))
}

/// Second-order allowance constant for the local bound.
pub const LOCAL_ALLOWANCE: f64 = 10.0;

/// `D(pi + d || M(pi + d)) <= D(pi || pi + d) / 2 * ln det(M)^{-1}` for
/// `M = retrieval phi`, with allowance `10 |d|_1^2 dim`.
pub fn local_prior_bound_report(
    retrieval: &StochasticMatrix,
    phi: &StochasticMatrix,
    prior: &ProbabilityVector,
    delta: &[f64],
) -> Result<BoundReport> {
    let n = prior.dim();
    if delta.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: delta.len() });
    }
    let shift: f64 = delta.iter().sum();
    if shift.abs() > tol::NORM {
        return Err(Error::InvalidInput(format!("perturbation sums to {shift:e}, not zero")));
    }
    let perturbed = ProbabilityVector::new(prior.as_slice().iter().zip(delta).map(|(p, d)| p + d).collect())?;
    let lhs = recovery_relative_entropy(retrieval, phi, &perturbed)?;
    let log_inv_det = identity_relative_entropy(retrieval, phi)?;
    let rhs = 0.5 * stochastic::relative_entropy(prior, &perturbed)? * log_inv_det;
    let l1: f64 = delta.iter().map(|d| d.abs()).sum();
    Ok(BoundReport::new(lhs, rhs, LOCAL_ALLOWANCE * l1 * l1 * n as f64))
}

fn contraction_ratio(m: &DMatrix<f64>, rho: &[f64], sigma: &[f64]) -> Option<f64> {
    let d = stochastic::relative_entropy_slices(rho, sigma).ok()?;
    if d < 1e-12 {
        return None;
    }
    let mr = m * DVector::from_column_slice(rho);
    let ms = m * DVector::from_column_slice(sigma);
    let dm = stochastic::relative_entropy_slices(mr.as_slice(), ms.as_slice()).ok()?;
    Some((d - dm) / d)
}

/// Coordinate descent on a pair of distributions, moving mass between two
/// entries of one of them at a time.
fn refine_pair(mut pair: (Vec<f64>, Vec<f64>), mut best: f64, ratio: impl Fn(&[f64], &[f64]) -> Option<f64>) -> f64 {
    let n = pair.0.len();
    let mut step: f64 = 0.05;
    while step > 1e-7 {
        let mut improved = false;
        for which in 0..2 {
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let mut trial = pair.clone();
                    let v = if which == 0 { &mut trial.0 } else { &mut trial.1 };
                    let t = step.min(v[j] - tol::POSITIVITY_FLOOR);
                    if t <= 0.0 {
                        continue;
                    }
                    v[i] += t;
                    v[j] -= t;
                    if let Some(r) = ratio(&trial.0, &trial.1) {
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
    best
}

/// Sampled infimum of the relative contraction of `D` under `retrieval phi`
/// against `2 ln det^{-1}`. The sampled infimum is an upper bound on the true
/// one, so `holds` certifies the sampled pairs only.
pub fn contraction_bound_report(
    retrieval: &StochasticMatrix,
    phi: &StochasticMatrix,
    sampler: &SimplexSampler,
) -> Result<BoundReport> {
    let m = retrieval.as_matrix() * phi.as_matrix();
    let doubled = SimplexSampler { sample_count: 2 * sampler.sample_count, ..*sampler };
    let samples = doubled.samples();
    let ratios: Vec<(f64, usize)> = samples
        .par_chunks(2)
        .enumerate()
        .filter_map(|(k, pair)| contraction_ratio(&m, pair[0].as_slice(), pair[1].as_slice()).map(|r| (r, k)))
        .collect();
    let (best, k) = ratios
        .iter()
        .copied()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::InvalidInput("no usable sample pair".into()))?;
    let start = (samples[2 * k].as_slice().to_vec(), samples[2 * k + 1].as_slice().to_vec());
    let lhs = refine_pair(start, best, |a, b| contraction_ratio(&m, a, b));
    let rhs = 2.0 * identity_relative_entropy(retrieval, phi)?;
    Ok(BoundReport::new(lhs, rhs, tol::BOUND))
}

/// Minimizer of the average recovery error over all stochastic maps.
#[derive(Debug, Clone)]
pub struct AverageEntropyMinimizer {
    pub map: StochasticMatrix,
    pub objective: f64,
    /// Objective after every accepted step; non-increasing.
    pub history: Vec<f64>,
}

const ARE_MAX_ITERATIONS: usize = 100_000;

/// Projected gradient descent (column-wise simplex projection, backtracking
/// with an adaptive step) on `mean_s D(rho_s || R phi rho_s)`.
pub fn average_re_minimizer(phi: &StochasticMatrix, sampler: &SimplexSampler) -> Result<AverageEntropyMinimizer> {
    let n = phi.dim();
    if sampler.dim != n {
        return Err(Error::DimensionMismatch { expected: n, found: sampler.dim });
    }
    let samples = sampler.samples();
    let rho = DMatrix::from_fn(n, samples.len(), |i, s| samples[s][i]);
    let y = phi.as_matrix() * &rho;
    let count = samples.len() as f64;
    let neg_entropy: f64 = samples.iter().map(|r| -r.entropy()).sum::<f64>() / count;

    let objective = |r: &DMatrix<f64>| -> f64 {
        let out = r * &y;
        let mut cross = 0.0;
        for (o, p) in out.iter().zip(rho.iter()) {
            if *o <= 0.0 {
                return f64::INFINITY;
            }
            cross -= p * o.ln();
        }
        neg_entropy + cross / count
    };
    let gradient = |r: &DMatrix<f64>| -> DMatrix<f64> {
        let out = r * &y;
        let w = rho.component_div(&out);
        -(w * y.transpose()) / count
    };
    let project = |r: &mut DMatrix<f64>| {
        for mut col in r.column_iter_mut() {
            let mut v: Vec<f64> = col.iter().copied().collect();
            linalg::project_simplex(&mut v);
            col.copy_from_slice(&v);
        }
    };

    let uniform = ProbabilityVector::uniform(n);
    let image = stochastic::apply(phi, &uniform)?;
    let mut r = DMatrix::from_fn(n, n, |i, j| phi.as_matrix()[(j, i)] * uniform[i] / image[j]);
    let mut f = objective(&r);
    let mut history = vec![f];
    let mut step = 1.0;
    let mut quiet = 0;
    for _ in 0..ARE_MAX_ITERATIONS {
        let g = gradient(&r);
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial = &r - &g * step;
            project(&mut trial);
            let diff = &trial - &r;
            let f_trial = objective(&trial);
            // Armijo condition for projected steps.
            if f_trial <= f + 0.5 * g.dot(&diff).min(0.0) && f_trial <= f {
                let change = (f - f_trial).abs() / f.abs().max(1e-300);
                let moved = diff.amax();
                r = trial;
                f = f_trial;
                history.push(f);
                accepted = true;
                quiet = if change <= tol::ARE || moved <= 1e-14 { quiet + 1 } else { 0 };
                step *= 1.5;
                break;
            }
            step *= 0.5;
        }
        if !accepted || quiet >= 5 {
            // Either stationary to machine precision or stably converged.
            let map = StochasticMatrix::new(r)?;
            return Ok(AverageEntropyMinimizer { map, objective: f, history });
        }
    }
    Err(Error::NonConvergence { solver: "average-entropy minimizer".into(), iterations: ARE_MAX_ITERATIONS })
}

/// Stationary distribution of a stochastic matrix with a unique, strictly
/// positive fixed point.
pub fn fixed_point(m: &StochasticMatrix) -> Result<ProbabilityVector> {
    let n = m.dim();
    let mut a = DMatrix::zeros(n + 1, n);
    a.view_mut((0, 0), (n, n)).copy_from(&(m.as_matrix() - DMatrix::identity(n, n)));
    a.row_mut(n).fill(1.0);
    let mut b = DVector::zeros(n + 1);
    b[n] = 1.0;
    let x = linalg::least_squares(&a, &b);
    let residual = (&a * &x - &b).amax();
    if residual > 1e-9 {
        return Err(Error::Infeasible { what: "fixed point".into(), residual, tol: 1e-9 });
    }
    ProbabilityVector::normalized(x.iter().copied().collect())
}
