//! Log-barrier Newton solve of
//!
//!   maximize ln det Gamma(L)  over transport plans L in U(pi, s),
//!   subject to Gamma(L) = J_pi^{-1/2} L J_s^{-1} phi J_pi^{1/2} symmetric,
//!
//! where `s = phi pi` and the retrieval map is `L J_s^{-1}`. The plan entries
//! are the decision variables; all equality constraints are removed by working
//! in the null space of their coefficient matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

const MU_START: f64 = 1.0;
const MU_END: f64 = 1e-10;
const MU_FACTOR: f64 = 0.2;
const DECREMENT_TOL: f64 = 1e-10;
const MAX_NEWTON: usize = 500;
const START_MIX: f64 = 1e-6;
const ACTIVE_THRESHOLD: f64 = 1e-7;

pub(crate) struct BarrierOutcome {
    pub l: DMatrix<f64>,
    pub iterations: usize,
    pub stages: usize,
    pub final_mu: f64,
    pub polished: bool,
}

struct Geometry {
    n: usize,
    /// `J_s^{-1} phi J_pi`: `Gamma = J_pi^{-1/2} L B J_pi^{-1/2}`.
    b: DMatrix<f64>,
    inv_sqrt_pi: DMatrix<f64>,
    equalities: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl Geometry {
    fn new(phi: &DMatrix<f64>, pi: &[f64], s: &[f64]) -> Self {
        let n = pi.len();
        let b = DMatrix::from_fn(n, n, |i, j| phi[(i, j)] * pi[j] / s[i]);
        let inv_sqrt_pi = DMatrix::from_diagonal(&DVector::from_iterator(n, pi.iter().map(|p| p.powf(-0.5))));
        let sym_rows = n * (n - 1) / 2;
        let rows = 2 * n + sym_rows;
        let mut equalities = DMatrix::zeros(rows, n * n);
        let mut rhs = DVector::zeros(rows);
        for i in 0..n {
            for j in 0..n {
                equalities[(i, i * n + j)] = 1.0;
                equalities[(n + j, i * n + j)] = 1.0;
            }
            rhs[i] = pi[i];
            rhs[n + i] = s[i];
        }
        // (L B)_{ab} - (L B)_{ba} = 0 for a < b.
        let mut r = 2 * n;
        for a in 0..n {
            for c in (a + 1)..n {
                for k in 0..n {
                    equalities[(r, a * n + k)] += b[(k, c)];
                    equalities[(r, c * n + k)] -= b[(k, a)];
                }
                r += 1;
            }
        }
        Self { n, b, inv_sqrt_pi, equalities, rhs }
    }

    fn gamma(&self, l: &DMatrix<f64>) -> DMatrix<f64> {
        linalg::symmetrize(&(&self.inv_sqrt_pi * l * &self.b * &self.inv_sqrt_pi))
    }

    fn reshape(&self, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, v)
    }

    fn flatten(&self, l: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(self.n * self.n, (0..self.n).flat_map(|i| (0..self.n).map(move |j| l[(i, j)])))
    }
}

/// Newton iterations on `-ln det Gamma - mu * sum ln L` restricted to the
/// affine set `L + span(directions)`. Cells flagged in `fixed` are held at
/// zero and excluded from the barrier.
struct Newton<'a> {
    geo: &'a Geometry,
    directions: Vec<DMatrix<f64>>,
    gamma_dirs: Vec<DMatrix<f64>>,
    fixed: Vec<bool>,
}

enum StepOutcome {
    Converged,
    Stalled,
    Moved,
}

impl<'a> Newton<'a> {
    fn new(geo: &'a Geometry, basis: &DMatrix<f64>, fixed: Vec<bool>) -> Self {
        let directions: Vec<DMatrix<f64>> =
            (0..basis.ncols()).map(|k| geo.reshape(basis.column(k).as_slice())).collect();
        let gamma_dirs = directions.iter().map(|d| geo.gamma(d)).collect();
        Self { geo, directions, gamma_dirs, fixed }
    }

    fn objective(&self, l: &DMatrix<f64>, mu: f64) -> Option<f64> {
        let log_det = linalg::log_det_spd(&self.geo.gamma(l))?;
        let mut barrier = 0.0;
        if mu > 0.0 {
            for (idx, x) in l.transpose().iter().enumerate() {
                if self.fixed[idx] {
                    continue;
                }
                if *x <= 0.0 {
                    return None;
                }
                barrier += x.ln();
            }
        } else if l.iter().any(|&x| x < -1e-15) {
            return None;
        }
        Some(-log_det - mu * barrier)
    }

    fn step(&self, l: &mut DMatrix<f64>, mu: f64) -> Result<StepOutcome> {
        let p = self.directions.len();
        if p == 0 {
            return Ok(StepOutcome::Converged);
        }
        let n = self.geo.n;
        let g = self.geo.gamma(l);
        let g_inv = nalgebra::Cholesky::new(g)
            .ok_or_else(|| Error::Singular("Gamma lost positive definiteness".into()))?
            .inverse();
        let w: Vec<DMatrix<f64>> = self.gamma_dirs.iter().map(|h| &g_inv * h).collect();

        let mut grad = DVector::zeros(p);
        let mut hess = DMatrix::zeros(p, p);
        for k in 0..p {
            grad[k] = -w[k].trace();
            for m in 0..=k {
                let t = w[k].component_mul(&w[m].transpose()).sum();
                hess[(k, m)] = t;
                hess[(m, k)] = t;
            }
        }
        if mu > 0.0 {
            for i in 0..n {
                for j in 0..n {
                    if self.fixed[i * n + j] {
                        continue;
                    }
                    let inv = 1.0 / l[(i, j)];
                    for k in 0..p {
                        let dk = self.directions[k][(i, j)] * inv;
                        grad[k] -= mu * dk;
                        for m in 0..=k {
                            let v = mu * dk * self.directions[m][(i, j)] * inv;
                            hess[(k, m)] += v;
                            if m != k {
                                hess[(m, k)] += v;
                            }
                        }
                    }
                }
            }
        }

        let ridge = 1e-14 * hess.trace().abs().max(1e-300);
        let chol = nalgebra::Cholesky::new(hess.clone())
            .or_else(|| nalgebra::Cholesky::new(hess + DMatrix::identity(p, p) * ridge))
            .ok_or_else(|| Error::Singular("Newton system is not positive definite".into()))?;
        let dz = -chol.solve(&grad);
        let decrement = -grad.dot(&dz);
        if decrement / 2.0 <= DECREMENT_TOL {
            return Ok(StepOutcome::Converged);
        }

        let mut dl = DMatrix::zeros(n, n);
        for (k, d) in self.directions.iter().enumerate() {
            dl += d * dz[k];
        }
        let f0 = self.objective(l, mu).ok_or_else(|| Error::Singular("infeasible Newton iterate".into()))?;
        let mut t = 1.0;
        for _ in 0..80 {
            let trial = &*l + &dl * t;
            if let Some(f) = self.objective(&trial, mu) {
                if f <= f0 - 0.25 * t * decrement {
                    *l = trial;
                    return Ok(StepOutcome::Moved);
                }
            }
            t *= 0.5;
        }
        Ok(StepOutcome::Stalled)
    }

    /// Runs to convergence; returns the iteration count.
    fn minimize(&self, l: &mut DMatrix<f64>, mu: f64) -> Result<usize> {
        for it in 0..MAX_NEWTON {
            match self.step(l, mu)? {
                StepOutcome::Moved => continue,
                StepOutcome::Converged | StepOutcome::Stalled => return Ok(it + 1),
            }
        }
        Err(Error::NonConvergence { solver: "determinant barrier".into(), iterations: MAX_NEWTON })
    }
}

pub(crate) fn maximize_log_det(phi: &DMatrix<f64>, pi: &[f64], s: &[f64]) -> Result<BarrierOutcome> {
    let n = pi.len();
    let geo = Geometry::new(phi, pi, s);

    let bayes_plan = DMatrix::from_fn(n, n, |i, j| pi[i] * phi[(j, i)]);
    let product_plan = DMatrix::from_fn(n, n, |i, j| pi[i] * s[j]);
    let mut l = bayes_plan * (1.0 - START_MIX) + product_plan * START_MIX;
    if linalg::log_det_spd(&geo.gamma(&l)).is_none() {
        return Err(Error::Singular("forward map is singular; every retrieval has zero determinant".into()));
    }

    let basis = linalg::null_space(&geo.equalities, 1e-10);
    let newton = Newton::new(&geo, &basis, vec![false; n * n]);
    let mut mu = MU_START;
    let mut iterations = 0;
    let mut stages = 0;
    loop {
        iterations += newton.minimize(&mut l, mu)?;
        stages += 1;
        if mu <= MU_END {
            break;
        }
        mu *= MU_FACTOR;
    }

    let polished = polish(&geo, &mut l, &mut iterations)?;
    for x in l.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    Ok(BarrierOutcome { l, iterations, stages, final_mu: mu, polished })
}

/// Pins near-zero plan entries to zero and maximizes `ln det Gamma` on that
/// face without a barrier. Kept only if feasible and no worse.
fn polish(geo: &Geometry, l: &mut DMatrix<f64>, iterations: &mut usize) -> Result<bool> {
    let n = geo.n;
    let fixed: Vec<bool> = (0..n * n).map(|idx| l[(idx / n, idx % n)] < ACTIVE_THRESHOLD).collect();
    if !fixed.iter().any(|&f| f) {
        return Ok(false);
    }
    let active: Vec<usize> = (0..n * n).filter(|&i| fixed[i]).collect();
    let rows = geo.equalities.nrows() + active.len();
    let mut e = DMatrix::zeros(rows, n * n);
    e.view_mut((0, 0), geo.equalities.shape()).copy_from(&geo.equalities);
    let mut rhs = DVector::zeros(rows);
    rhs.rows_mut(0, geo.rhs.len()).copy_from(&geo.rhs);
    for (r, &idx) in active.iter().enumerate() {
        e[(geo.equalities.nrows() + r, idx)] = 1.0;
    }

    let x = geo.flatten(l);
    let correction = linalg::least_squares(&e, &(&rhs - &e * &x));
    let mut projected = x + correction;
    for &idx in &active {
        projected[idx] = 0.0;
    }
    if projected.iter().any(|&v| v < -1e-14) {
        return Ok(false);
    }
    let mut candidate = geo.reshape(projected.as_slice());
    let before = match linalg::log_det_spd(&geo.gamma(l)) {
        Some(v) => v,
        None => return Ok(false),
    };
    if linalg::log_det_spd(&geo.gamma(&candidate)).is_none() {
        return Ok(false);
    }
    let basis = linalg::null_space(&e, 1e-10);
    let newton = Newton::new(geo, &basis, fixed);
    match newton.minimize(&mut candidate, 0.0) {
        Ok(it) => *iterations += it,
        Err(_) => return Ok(false),
    }
    let after = match linalg::log_det_spd(&geo.gamma(&candidate)) {
        Some(v) => v,
        None => return Ok(false),
    };
    if after >= before - 1e-12 && candidate.iter().all(|&v| v >= -1e-14) {
        *l = candidate;
        Ok(true)
    } else {
        Ok(false)
    }
}
