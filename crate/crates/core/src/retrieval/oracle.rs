//! Grid-search reference for the optimal retrieval on small polytopes.
//!
//! Works directly on convex weights over the retrieval polytope vertices, so it
//! shares nothing with the barrier solver beyond vertex enumeration. The
//! equality constraints (unit total weight, symmetric Gamma) are solved for a
//! basis of dependent weights; the remaining free weights are gridded. Every
//! choice of basis is tried so that optima on lower-dimensional faces are hit.

use nalgebra::{DMatrix, DVector};

use super::RetrievalProblem;
use crate::error::{Error, Result};
use crate::polytope::{self, CoefficientVector};
use crate::stochastic::StochasticMatrix;
use crate::tol;

/// Largest vertex count the oracle accepts.
pub const MAX_VERTICES: usize = 6;
/// Grid points evaluated per exhaustive pass before switching to refinement.
const POINT_BUDGET: u64 = 200_000;
/// Refinement keeps this many best coarse points per basis.
const REFINE_SEEDS: usize = 3;
/// Refinement window half-width, in units of the previous step.
const WINDOW: i64 = 4;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub map: StochasticMatrix,
    pub coefficients: CoefficientVector,
    pub determinant: f64,
    pub points_evaluated: u64,
}

struct Setup {
    n: usize,
    k: usize,
    /// Gamma of each vertex, row-major.
    gammas: Vec<Vec<f64>>,
    basis: Vec<usize>,
    free: Vec<usize>,
    /// Dependent weights = offset + coupling * free weights.
    offset: DVector<f64>,
    coupling: DMatrix<f64>,
}

impl Setup {
    fn weights(&self, free: &[f64]) -> Option<Vec<f64>> {
        let mut lambda = vec![0.0; self.k];
        for (f, &idx) in free.iter().zip(&self.free) {
            lambda[idx] = *f;
        }
        for (r, &idx) in self.basis.iter().enumerate() {
            let mut v = self.offset[r];
            for (c, f) in free.iter().enumerate() {
                v += self.coupling[(r, c)] * f;
            }
            if v < -1e-12 {
                return None;
            }
            lambda[idx] = v.max(0.0);
        }
        Some(lambda)
    }

    /// `det Gamma(lambda)` if the weights are feasible.
    fn evaluate(&self, lambda: &[f64]) -> Option<f64> {
        let n = self.n;
        let mut g = vec![0.0; n * n];
        for (w, gk) in lambda.iter().zip(&self.gammas) {
            if *w != 0.0 {
                for (a, b) in g.iter_mut().zip(gk) {
                    *a += w * b;
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                if (g[i * n + j] - g[j * n + i]).abs() > tol::SYMMETRY {
                    return None;
                }
                let avg = 0.5 * (g[i * n + j] + g[j * n + i]);
                g[i * n + j] = avg;
                g[j * n + i] = avg;
            }
        }
        cholesky_det(&mut g, n, tol::CHECK)
    }
}

/// Determinant via an in-place Cholesky of `g + shift I`; `None` when that fails.
/// The determinant itself is of `g` and is clipped at zero.
fn cholesky_det(g: &mut [f64], n: usize, shift: f64) -> Option<f64> {
    let mut a = g.to_vec();
    for i in 0..n {
        a[i * n + i] += shift;
    }
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut v = a[i * n + j];
            for k in 0..j {
                v -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = v / d;
        }
    }
    let m = DMatrix::from_row_slice(n, n, g);
    Some(m.determinant().max(0.0))
}

fn subsets(k: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, k: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            cur.push(i);
            rec(i + 1, k, r, cur, out);
            cur.pop();
        }
    }
    rec(0, k, r, &mut cur, &mut out);
    out
}

/// Row-reduces `[a | b]` and keeps a maximal independent set of rows.
fn independent_rows(a: &DMatrix<f64>, b: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
    let mut reduced: Vec<DVector<f64>> = Vec::new();
    for r in 0..a.nrows() {
        let mut v = a.row(r).transpose();
        for q in &reduced {
            let c = v.dot(q);
            v -= q * c;
        }
        let norm = v.norm();
        if norm > 1e-9 * a.row(r).norm().max(1e-300) && norm > 1e-12 {
            reduced.push(v / norm);
            rows.push((a.row(r).transpose(), b[r]));
        }
    }
    let m = DMatrix::from_fn(rows.len(), a.ncols(), |i, j| rows[i].0[j]);
    let v = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    (m, v)
}

/// Lattice points `c` with `c_i >= lo_i`, `c_i <= hi_i` and `sum c <= total`.
fn for_each_point(lo: &[i64], hi: &[i64], total: i64, f: &mut impl FnMut(&[i64])) {
    let mut c = lo.to_vec();
    fn rec(i: usize, lo: &[i64], hi: &[i64], left: i64, c: &mut Vec<i64>, f: &mut impl FnMut(&[i64])) {
        if i == c.len() {
            f(c);
            return;
        }
        let mut v = lo[i];
        while v <= hi[i] && v <= left {
            c[i] = v;
            rec(i + 1, lo, hi, left - v, c, f);
            v += 1;
        }
    }
    if c.is_empty() {
        f(&c);
        return;
    }
    let zero_sum: i64 = lo.iter().sum();
    if zero_sum > total {
        return;
    }
    rec(0, lo, hi, total, &mut c, f);
}

fn simplex_point_count(dims: usize, steps: u64) -> u64 {
    // C(steps + dims, dims)
    let mut c: u64 = 1;
    for i in 1..=dims as u64 {
        c = c.saturating_mul(steps + i) / i;
    }
    c
}

/// Best feasible weights on the grid of spacing `grid_step` (refined
/// coarse-to-fine when the full grid is too large). Requires at most
/// [`MAX_VERTICES`] retrieval-polytope vertices.
pub fn brute_force_optimal(problem: &RetrievalProblem, grid_step: f64) -> Result<OracleResult> {
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return Err(Error::OutOfRange { name: "grid_step", value: grid_step, lo: 0.0, hi: 0.5 });
    }
    let poly = problem.retrieval_polytope()?;
    let k = poly.vertex_count();
    if k > MAX_VERTICES {
        return Err(Error::InvalidInput(format!(
            "grid oracle limited to {MAX_VERTICES} vertices, polytope has {k}"
        )));
    }
    let n = problem.dim();
    let pi = problem.prior().as_slice();
    let s = problem.image_prior().as_slice();
    let phi = problem.phi().as_matrix();
    let gammas: Vec<Vec<f64>> = poly
        .vertices()
        .iter()
        .map(|w| {
            let g = DMatrix::from_fn(n, n, |a, b| {
                (0..n).map(|c| w[(a, c)] / s[c] * phi[(c, b)]).sum::<f64>() * (pi[b] / pi[a]).sqrt()
            });
            (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| g[(a, b)]).collect()
        })
        .collect();

    let sym = n * (n - 1) / 2;
    let mut e = DMatrix::zeros(1 + sym, k);
    let mut rhs = DVector::zeros(1 + sym);
    rhs[0] = 1.0;
    for c in 0..k {
        e[(0, c)] = 1.0;
        let mut r = 1;
        for a in 0..n {
            for b in (a + 1)..n {
                e[(r, c)] = gammas[c][a * n + b] - gammas[c][b * n + a];
                r += 1;
            }
        }
    }
    let (e, rhs) = independent_rows(&e, &rhs);
    let rank = e.nrows();
    let steps = (1.0 / grid_step).round() as i64;

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut points = 0u64;
    for basis in subsets(k, rank) {
        let eb = e.select_columns(basis.iter());
        let Some(eb_inv) = eb.clone().try_inverse() else { continue };
        if (eb.norm() * eb_inv.norm()) > 1e10 {
            continue;
        }
        let free: Vec<usize> = (0..k).filter(|i| !basis.contains(i)).collect();
        let ef = e.select_columns(free.iter());
        let setup = Setup {
            n,
            k,
            gammas: gammas.clone(),
            offset: &eb_inv * &rhs,
            coupling: -(&eb_inv * ef),
            basis,
            free,
        };
        let (value, lambda, evaluated) = search_basis(&setup, steps);
        points += evaluated;
        if let Some(v) = value {
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, lambda));
            }
        }
    }

    let (_, lambda) = best.ok_or_else(|| Error::Infeasible {
        what: "no grid point satisfies the constraints".into(),
        residual: f64::NAN,
        tol: tol::SYMMETRY,
    })?;
    let sum: f64 = lambda.iter().sum();
    let coefficients = CoefficientVector::new(lambda.iter().map(|x| x / sum).collect())?;
    let map = polytope::map_from_coefficients(&coefficients, poly)?;
    let determinant = super::composition_determinant(&map, problem);
    Ok(OracleResult { map, coefficients, determinant, points_evaluated: points })
}

fn search_basis(setup: &Setup, steps: i64) -> (Option<f64>, Vec<f64>, u64) {
    let f = setup.free.len();
    let mut evaluated = 0u64;
    let mut scored: Vec<(f64, Vec<i64>)> = Vec::new();
    let mut scan = |lo: &[i64], hi: &[i64], total: i64, h: f64, scored: &mut Vec<(f64, Vec<i64>)>| {
        let mut free = vec![0.0; f];
        for_each_point(lo, hi, total, &mut |c: &[i64]| {
            evaluated += 1;
            for (x, ci) in free.iter_mut().zip(c) {
                *x = *ci as f64 * h;
            }
            if let Some(lambda) = setup.weights(&free) {
                if let Some(v) = setup.evaluate(&lambda) {
                    scored.push((v, c.to_vec()));
                }
            }
        });
    };

    // Coarsest power-of-two multiple of the step whose full grid fits the budget.
    let mut factor: i64 = 1;
    while simplex_point_count(f, (steps / factor) as u64) > POINT_BUDGET && factor < steps {
        factor *= 2;
    }
    let coarse = steps / factor;
    scan(&vec![0; f], &vec![coarse; f], coarse, factor as f64 / steps as f64, &mut scored);
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    // Coordinates below are in units of the fine step.
    let mut seeds: Vec<(f64, Vec<i64>)> =
        scored.iter().take(REFINE_SEEDS).map(|(v, c)| (*v, c.iter().map(|x| x * factor).collect())).collect();

    let mut width = factor;
    while width > 1 {
        let next = width / 2;
        let mut refined = Vec::new();
        for (_, centre) in &seeds {
            let lo: Vec<i64> = centre.iter().map(|c| ((c - WINDOW * width) / next).max(0)).collect();
            let hi: Vec<i64> = centre.iter().map(|c| (c + WINDOW * width) / next).collect();
            let mut local = Vec::new();
            scan(&lo, &hi, steps / next, next as f64 / steps as f64, &mut local);
            refined.extend(local.into_iter().map(|(v, c)| (v, c.iter().map(|x| x * next).collect::<Vec<_>>())));
        }
        refined.sort_by(|a, b| b.0.total_cmp(&a.0));
        refined.dedup_by(|a, b| a.1 == b.1);
        if !refined.is_empty() {
            seeds = refined.into_iter().take(REFINE_SEEDS).collect();
        }
        width = next;
    }

    match seeds.first() {
        Some((v, c)) => {
            let free: Vec<f64> = c.iter().map(|x| *x as f64 / steps as f64).collect();
            let lambda = setup.weights(&free).unwrap_or_default();
            (Some(*v), lambda, evaluated)
        }
        None => (None, Vec::new(), evaluated),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::ProbabilityVector;

    #[test]
    fn lattice_enumeration_counts() {
        let mut count = 0;
        for_each_point(&[0, 0], &[10, 10], 10, &mut |_| count += 1);
        assert_eq!(count, simplex_point_count(2, 10));
        assert_eq!(count, 66);
    }

    #[test]
    fn oracle_finds_identity_for_symmetric_channel() {
        let p = RetrievalProblem::new(
            StochasticMatrix::from_rows(&[vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap(),
            ProbabilityVector::uniform(2),
        )
        .unwrap();
        let r = brute_force_optimal(&p, 1e-3).unwrap();
        assert!((r.determinant - 0.5).abs() < 1e-12);
    }
}
