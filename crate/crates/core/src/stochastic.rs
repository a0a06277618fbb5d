//! Probability vectors, left-stochastic matrices and the divergences between
//! distributions that the rest of the crate is built on.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::tol;

/// A strictly positive distribution on `n` outcomes.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbabilityVector {
    entries: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("empty probability vector".into()));
        }
        for (index, &value) in entries.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if value < tol::POSITIVITY_FLOOR {
                return Err(Error::NotPositive { index, value, floor: tol::POSITIVITY_FLOOR });
            }
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > tol::NORM {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self { entries })
    }

    /// Divides by the sum before validating.
    pub fn normalized(raw: Vec<f64>) -> Result<Self> {
        let sum: f64 = raw.iter().sum();
        if sum.is_nan() || sum <= 0.0 || !sum.is_finite() {
            return Err(Error::NotNormalized { sum });
        }
        Self::new(raw.into_iter().map(|x| x / sum).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Self { entries: vec![1.0 / n as f64; n] }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.entries)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self.entries.iter().map(|p| p * p.ln()).sum::<f64>()
    }

    /// `-sum_i ln p_i`, the integrand of the volume constant.
    pub fn neg_log_sum(&self) -> f64 {
        -self.entries.iter().map(|p| p.ln()).sum::<f64>()
    }
}

impl std::ops::Index<usize> for ProbabilityVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.entries[i]
    }
}

/// A square left-stochastic matrix: nonnegative entries, columns summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    m: DMatrix<f64>,
}

impl StochasticMatrix {
    /// Validates the matrix; negative entries above `-NORM` are clamped to zero.
    pub fn new(mut m: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::InvalidInput("empty matrix".into()));
        }
        for col in 0..cols {
            for row in 0..rows {
                let value = m[(row, col)];
                if !value.is_finite() {
                    return Err(Error::NonFinite { index: row * cols + col });
                }
                if value < 0.0 {
                    if value < -tol::NORM {
                        return Err(Error::NegativeEntry { row, col, value });
                    }
                    m[(row, col)] = 0.0;
                }
            }
            let sum = m.column(col).sum();
            if (sum - 1.0).abs() > tol::NORM {
                return Err(Error::ColumnSum { col, sum });
            }
        }
        Ok(Self { m })
    }

    /// Builds from row-major nested rows (`rows[i][j]` is `P(i|j)`).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::NotSquare { rows: n, cols: r.len() });
            }
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self { m: DMatrix::identity(n, n) }
    }

    /// Deterministic map sending input `j` to output `perm[j]`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidInput(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        let mut m = DMatrix::zeros(n, n);
        for (j, &p) in perm.iter().enumerate() {
            m[(p, j)] = 1.0;
        }
        Ok(Self { m })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|i| self.m.row(i).iter().copied().collect()).collect()
    }

    /// `self * inner`: apply `inner` first.
    pub fn compose(&self, inner: &StochasticMatrix) -> StochasticMatrix {
        Self { m: &self.m * &inner.m }
    }

    /// The permutation `perm` with `self = permutation(perm)`, if any.
    pub fn as_permutation(&self) -> Option<Vec<usize>> {
        let n = self.dim();
        let mut perm = Vec::with_capacity(n);
        for j in 0..n {
            let mut target = None;
            for i in 0..n {
                let v = self.m[(i, j)];
                if (v - 1.0).abs() <= tol::CHECK {
                    if target.is_some() {
                        return None;
                    }
                    target = Some(i);
                } else if v.abs() > tol::CHECK {
                    return None;
                }
            }
            perm.push(target?);
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if seen[p] {
                return None;
            }
            seen[p] = true;
        }
        Some(perm)
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }
}

/// The diagonal matrix `J_p = diag(p)` of a positive distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalEmbedding {
    p: ProbabilityVector,
}

impl DiagonalEmbedding {
    pub fn new(p: &ProbabilityVector) -> Self {
        Self { p: p.clone() }
    }

    /// `diag(p)^s` for any real power.
    pub fn power(&self, s: f64) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.p.dim(),
            self.p.as_slice().iter().map(|x| x.powf(s)),
        ))
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        self.power(1.0)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.power(-1.0)
    }
}

pub fn apply(phi: &StochasticMatrix, rho: &ProbabilityVector) -> Result<ProbabilityVector> {
    if phi.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), found: rho.dim() });
    }
    let out = phi.as_matrix() * rho.to_dvector();
    ProbabilityVector::new(out.iter().copied().collect())
}

/// `D(rho || sigma) = sum_i rho_i ln(rho_i / sigma_i)` in nats.
pub fn relative_entropy(rho: &ProbabilityVector, sigma: &ProbabilityVector) -> Result<f64> {
    relative_entropy_slices(rho.as_slice(), sigma.as_slice())
}

/// Relative entropy on raw slices; every entry must be strictly positive.
pub fn relative_entropy_slices(rho: &[f64], sigma: &[f64]) -> Result<f64> {
    if rho.len() != sigma.len() {
        return Err(Error::DimensionMismatch { expected: rho.len(), found: sigma.len() });
    }
    let mut total = 0.0;
    for (index, (&r, &s)) in rho.iter().zip(sigma).enumerate() {
        if r.is_nan() || r <= 0.0 {
            return Err(Error::NotPositive { index, value: r, floor: 0.0 });
        }
        if s.is_nan() || s <= 0.0 {
            return Err(Error::NotPositive { index, value: s, floor: 0.0 });
        }
        total += r * (r / s).ln();
    }
    Ok(total)
}

/// Convex kernels `g` with `g(1) = 0` and `g''(1) = 1`.
pub mod kernels {
    /// Relative entropy `D(rho || sigma)` as a contrast.
    pub fn kullback_leibler(t: f64) -> f64 {
        -t.ln()
    }

    pub fn chi_squared(t: f64) -> f64 {
        0.5 * (t - 1.0) * (t - 1.0)
    }

    pub fn hellinger(t: f64) -> f64 {
        let r = t.sqrt() - 1.0;
        2.0 * r * r
    }

    /// Commutative restriction of the square-root quantum contrast.
    pub fn square_root(t: f64) -> f64 {
        0.5 * (t - 1.0) * (t - 1.0) / t.sqrt()
    }
}

/// `H_g(rho || sigma) = sum_i rho_i g(sigma_i / rho_i)`.
pub fn csiszar_contrast(
    g: impl Fn(f64) -> f64,
    rho: &ProbabilityVector,
    sigma: &ProbabilityVector,
) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: sigma.dim() });
    }
    Ok(rho.as_slice().iter().zip(sigma.as_slice()).map(|(&r, &s)| r * g(s / r)).sum())
}

/// `1/2 sum_i delta_i^2 / rho_i`, the local quadratic form shared by every
/// normalized contrast.
pub fn fisher_quadratic(rho: &ProbabilityVector, delta: &[f64]) -> f64 {
    0.5 * rho.as_slice().iter().zip(delta).map(|(r, d)| d * d / r).sum::<f64>()
}

pub fn is_left_stochastic(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square()
        && m.iter().all(|&x| x >= -tol)
        && (0..m.ncols()).all(|j| (m.column(j).sum() - 1.0).abs() <= tol)
}

/// `max_{i,j} |M_ij pi_j - M_ji pi_i|`.
pub fn detailed_balance_residual(m: &DMatrix<f64>, pi: &ProbabilityVector) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((m[(i, j)] * pi[j] - m[(j, i)] * pi[i]).abs());
        }
    }
    worst
}

pub fn is_detailed_balanced(m: &DMatrix<f64>, pi: &ProbabilityVector, tol: f64) -> bool {
    detailed_balance_residual(m, pi) <= tol
}

/// Spectrum of `m`, computed from the symmetric similarity
/// `J^{-1/2} M J^{1/2}` when `m` is detailed balanced with respect to `prior`.
pub fn spectrum(m: &DMatrix<f64>, prior: Option<&ProbabilityVector>, tol: f64) -> Result<Vec<C64>> {
    if let Some(pi) = prior {
        if is_detailed_balanced(m, pi, tol) {
            let j = DiagonalEmbedding::new(pi);
            let s = j.power(-0.5) * m * j.power(0.5);
            return Ok(linalg::sym_eigenvalues(&s).into_iter().map(|v| C64::new(v, 0.0)).collect());
        }
    }
    linalg::real_matrix_eigenvalues(m)
}

/// True when every eigenvalue is real (within `tol`) and at least `-tol`.
pub fn spectrum_is_nonnegative(m: &DMatrix<f64>, tol: f64) -> Result<bool> {
    spectrum_is_nonnegative_wrt(m, None, tol)
}

pub fn spectrum_is_nonnegative_wrt(
    m: &DMatrix<f64>,
    prior: Option<&ProbabilityVector>,
    tol: f64,
) -> Result<bool> {
    Ok(spectrum(m, prior, tol)?.iter().all(|z| z.im.abs() <= tol && z.re >= -tol))
}
