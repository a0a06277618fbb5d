//! Dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen, SVD};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

const SCHUR_ITERATIONS: usize = 100_000;

/// Eigenvalues of a real symmetric matrix (the input is symmetrized first).
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let s = symmetrize(m);
    let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Eigenvalues of a general complex square matrix via the complex Schur form.
pub fn complex_eigenvalues(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur =
        Schur::try_new(m.clone(), 1e-15, SCHUR_ITERATIONS).ok_or(Error::EigenFailure { dim: n })?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Eigenvalues of a general real square matrix.
pub fn real_matrix_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<C64>> {
    complex_eigenvalues(&to_complex(m))
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

pub fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn max_anti_hermitian(m: &DMatrix<C64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..=i {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_fn(m: &DMatrix<C64>, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
    let (values, u) = hermitian_eigen(m);
    let mut scaled = u.clone();
    for (j, &v) in values.iter().enumerate() {
        let fv = C64::new(f(v), 0.0);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= fv;
        }
    }
    &scaled * u.adjoint()
}

/// Orthonormal basis of the null space of `a`, one basis vector per column.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (rows, cols) = a.shape();
    if rows == 0 {
        return DMatrix::identity(cols, cols);
    }
    let padded = if rows < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let scale = svd.singular_values.iter().copied().fold(0.0, f64::max).max(1.0);
    let basis: Vec<DVector<f64>> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] <= rel_tol * scale)
        .map(|k| v_t.row(k).transpose())
        .collect();
    // Wide matrices padded to square always expose every right singular vector,
    // so the filter above sees the complete null space.
    if basis.is_empty() {
        DMatrix::zeros(cols, 0)
    } else {
        DMatrix::from_columns(&basis)
    }
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = SVD::new(a.clone(), true, true);
    let scale = svd.singular_values.iter().copied().fold(0.0, f64::max);
    svd.solve(b, 1e-13 * scale.max(1e-300))
        .expect("both singular subspaces were computed")
}

/// Lawson-Hanson nonnegative least squares: minimizes `|a x - b|` with `x >= 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    // Columns that entered with a nonpositive coefficient; retried once `x` moves.
    let mut blocked = vec![false; n];
    let tol = 1e-14 * (a.norm() * b.norm()).max(1e-300);
    let max_outer = 3 * n + 30;

    for _ in 0..max_outer {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && !blocked[j])
            .max_by(|&p, &q| w[p].total_cmp(&w[q]));
        let Some(t) = candidate else { return Ok(x) };
        if w[t] <= tol {
            return Ok(x);
        }
        passive[t] = true;

        let mut inner = 0;
        loop {
            inner += 1;
            if inner > max_outer {
                return Err(Error::NonConvergence { solver: "nnls".into(), iterations: inner });
            }
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let sub = a.select_columns(idx.iter());
            let z_sub = least_squares(&sub, b);
            let mut z = DVector::zeros(n);
            for (k, &j) in idx.iter().enumerate() {
                z[j] = z_sub[k];
            }
            if inner == 1 && z[t] <= 0.0 {
                // Nearly dependent on the passive set; entering would stall.
                passive[t] = false;
                blocked[t] = true;
                break;
            }
            if idx.iter().all(|&j| z[j] > 0.0) {
                x = z;
                blocked.iter_mut().for_each(|b| *b = false);
                break;
            }
            let mut alpha = f64::INFINITY;
            for &j in &idx {
                if z[j] <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - z[j]));
                }
            }
            x += (z - &x) * alpha;
            for &j in &idx {
                if x[j] <= 1e-15 {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    Err(Error::NonConvergence { solver: "nnls".into(), iterations: max_outer })
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumulative += uk;
        let t = (cumulative - 1.0) / (k as f64 + 1.0);
        if uk - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// True when the symmetric matrix is positive definite.
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    nalgebra::Cholesky::new(symmetrize(m)).is_some()
}

/// `ln det` of a symmetric positive definite matrix, or `None`.
pub fn log_det_spd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = nalgebra::Cholesky::new(symmetrize(m))?;
    let l = chol.l();
    Some((0..m.nrows()).map(|i| 2.0 * l[(i, i)].ln()).sum())
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs_diff_c(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &DMatrix<C64>) -> f64 {
    hermitian_eigenvalues(m).iter().map(|v| v.abs()).sum()
}
