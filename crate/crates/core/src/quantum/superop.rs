use nalgebra::{DMatrix, DVector};

use super::{DensityMatrix, C64};
use crate::error::{Error, Result};
use crate::linalg;

/// Column-stacking `vec`.
pub fn vec(x: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(x.as_slice())
}

pub fn unvec(v: &[C64], d: usize) -> DMatrix<C64> {
    DMatrix::from_column_slice(d, d, v)
}

/// A linear map on `d x d` matrices as a `d^2 x d^2` matrix on `vec(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    d: usize,
    m: DMatrix<C64>,
}

impl Superoperator {
    pub fn from_matrix(d: usize, m: DMatrix<C64>) -> Result<Self> {
        if m.shape() != (d * d, d * d) {
            return Err(Error::DimensionMismatch { expected: d * d, found: m.nrows() });
        }
        Ok(Self { d, m })
    }

    pub fn identity(d: usize) -> Self {
        Self { d, m: DMatrix::identity(d * d, d * d) }
    }

    /// Tabulates `f` on the matrix units `E_ij`.
    pub fn from_fn(d: usize, f: impl Fn(&DMatrix<C64>) -> DMatrix<C64>) -> Self {
        let mut m = DMatrix::zeros(d * d, d * d);
        for j in 0..d {
            for i in 0..d {
                let mut e = DMatrix::zeros(d, d);
                e[(i, j)] = C64::new(1.0, 0.0);
                m.column_mut(i + d * j).copy_from(&vec(&f(&e)));
            }
        }
        Self { d, m }
    }

    /// `X -> sum_k K_k X K_k^dagger`, i.e. `sum_k conj(K_k) kron K_k`.
    pub fn from_kraus(ops: &[DMatrix<C64>]) -> Result<Self> {
        let d = ops.first().ok_or_else(|| Error::InvalidChannel("no Kraus operators".into()))?.nrows();
        let mut m = DMatrix::zeros(d * d, d * d);
        for k in ops {
            if k.shape() != (d, d) {
                return Err(Error::DimensionMismatch { expected: d, found: k.nrows() });
            }
            m += k.conjugate().kronecker(k);
        }
        Ok(Self { d, m })
    }

    pub fn unitary(u: &DMatrix<C64>) -> Result<Self> {
        Self::from_kraus(std::slice::from_ref(u))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn apply(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let out = &self.m * vec(x);
        unvec(out.as_slice(), self.d)
    }

    /// `self o inner`.
    pub fn compose(&self, inner: &Superoperator) -> Superoperator {
        Self { d: self.d, m: &self.m * &inner.m }
    }

    /// Adjoint with respect to the Hilbert-Schmidt inner product.
    pub fn adjoint(&self) -> Superoperator {
        Self { d: self.d, m: self.m.adjoint() }
    }

    pub fn scale_add(&self, a: f64, other: &Superoperator, b: f64) -> Superoperator {
        Self { d: self.d, m: &self.m * C64::new(a, 0.0) + &other.m * C64::new(b, 0.0) }
    }

    /// `self kron other` acting on the composite system (first factor major).
    pub fn tensor(&self, other: &Superoperator) -> Superoperator {
        let (da, db) = (self.d, other.d);
        let d = da * db;
        let mut m = DMatrix::zeros(d * d, d * d);
        for a2 in 0..da {
            for b2 in 0..db {
                for a1 in 0..da {
                    for b1 in 0..db {
                        let left = unvec(self.m.column(a1 + da * a2).as_slice(), da);
                        let right = unvec(other.m.column(b1 + db * b2).as_slice(), db);
                        let p = a1 * db + b1;
                        let q = a2 * db + b2;
                        m.column_mut(p + d * q).copy_from(&vec(&left.kronecker(&right)));
                    }
                }
            }
        }
        Self { d, m }
    }

    /// Normalized Choi matrix `(1/d) sum_ij E_ij kron Phi(E_ij)`.
    pub fn choi(&self) -> DMatrix<C64> {
        let d = self.d;
        let scale = C64::new(1.0 / d as f64, 0.0);
        DMatrix::from_fn(d * d, d * d, |r, c| {
            let (i, a) = (r / d, r % d);
            let (j, b) = (c / d, c % d);
            self.m[(a + d * b, i + d * j)] * scale
        })
    }

    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        linalg::complex_eigenvalues(&self.m)
    }

    pub fn determinant(&self) -> C64 {
        self.m.determinant()
    }

    /// Largest entrywise distance between the matrices.
    pub fn distance(&self, other: &Superoperator) -> f64 {
        linalg::max_abs_diff_c(&self.m, &other.m)
    }

    pub fn is_unitary_channel(&self, tol: f64) -> bool {
        let n = self.m.nrows();
        linalg::max_abs_diff_c(&(&self.m * self.m.adjoint()), &DMatrix::identity(n, n)) <= tol
    }
}

/// `X -> pi^{s/2} X pi^{s/2}`; `s = 1` is the `J_pi` map, `s = -1` its inverse.
pub fn j_power(pi: &DensityMatrix, s: f64) -> Superoperator {
    let half = pi.power(s / 2.0);
    Superoperator { d: pi.dim(), m: half.transpose().kronecker(&half) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vec_identity() {
        let a = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.5), c(2.0, 0.0), c(0.0, -1.0), c(3.0, 1.0)]);
        let x = DMatrix::from_row_slice(2, 2, &[c(0.2, 0.0), c(-1.0, 1.0), c(0.5, 0.5), c(1.0, 0.0)]);
        let b = DMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(1.0, 0.0), c(2.0, 0.0), c(-1.0, -1.0)]);
        let lhs = vec(&(&a * &x * &b));
        let rhs = b.transpose().kronecker(&a) * vec(&x);
        assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn kraus_and_fn_agree() {
        let k = DMatrix::from_row_slice(2, 2, &[c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0), c(0.0, 0.0)]);
        let s = Superoperator::from_kraus(std::slice::from_ref(&k)).unwrap();
        let t = Superoperator::from_fn(2, |x| &k * x * k.adjoint());
        assert!(s.distance(&t) < 1e-15);
    }

    #[test]
    fn adjoint_is_hilbert_schmidt_adjoint() {
        let k = DMatrix::from_row_slice(2, 2, &[c(0.6, 0.1), c(0.3, 0.8), c(-0.2, 0.0), c(0.5, 0.4)]);
        let s = Superoperator::from_kraus(std::slice::from_ref(&k)).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, -0.5), c(0.5, 0.5), c(2.0, 0.0)]);
        let b = DMatrix::from_row_slice(2, 2, &[c(0.0, 1.0), c(1.0, 0.0), c(2.0, 0.0), c(-1.0, -1.0)]);
        let lhs = (a.adjoint() * s.apply(&b)).trace();
        let rhs = (s.adjoint().apply(&a).adjoint() * &b).trace();
        assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn tensor_acts_factorwise() {
        let k1 = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let k2 = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]);
        let s1 = Superoperator::unitary(&k1).unwrap();
        let s2 = Superoperator::unitary(&k2).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)]);
        let b = DMatrix::from_row_slice(2, 2, &[c(0.4, 0.0), c(0.0, 0.3), c(0.0, -0.3), c(0.6, 0.0)]);
        let lhs = s1.tensor(&s2).apply(&a.kronecker(&b));
        let rhs = s1.apply(&a).kronecker(&s2.apply(&b));
        assert!(linalg::max_abs_diff_c(&lhs, &rhs) < 1e-15);
    }
}
