//! Retrieval maps for a forward map `phi` and prior `pi`: the Bayes reverse,
//! the axiom checks every retrieval map must pass, and the
//! determinant-maximizing retrieval.

pub mod oracle;
mod solver;

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use serde::Serialize;

pub use oracle::{brute_force_optimal, OracleResult};

use crate::error::{Error, Result};
use crate::linalg;
use crate::polytope::{self, CoefficientVector, TransportationPolytope};
use crate::stochastic::{self, DiagonalEmbedding, ProbabilityVector, StochasticMatrix};
use crate::tol;

type LazyPolytope = OnceLock<Result<Arc<TransportationPolytope>>>;

/// A forward map together with a strictly positive prior.
#[derive(Debug, Clone)]
pub struct RetrievalProblem {
    phi: StochasticMatrix,
    prior: ProbabilityVector,
    image_prior: ProbabilityVector,
    forward: LazyPolytope,
    retrieval: LazyPolytope,
}

impl RetrievalProblem {
    pub fn new(phi: StochasticMatrix, prior: ProbabilityVector) -> Result<Self> {
        let image_prior = stochastic::apply(&phi, &prior)?;
        Ok(Self { phi, prior, image_prior, forward: OnceLock::new(), retrieval: OnceLock::new() })
    }

    pub fn phi(&self) -> &StochasticMatrix {
        &self.phi
    }

    pub fn prior(&self) -> &ProbabilityVector {
        &self.prior
    }

    /// `phi * pi`.
    pub fn image_prior(&self) -> &ProbabilityVector {
        &self.image_prior
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }

    /// `U(phi pi, pi)`, which contains `phi J_pi`.
    pub fn forward_polytope(&self) -> Result<&TransportationPolytope> {
        self.forward
            .get_or_init(|| polytope::enumerate_vertices(&self.image_prior, &self.prior).map(Arc::new))
            .as_deref()
            .map_err(Clone::clone)
    }

    /// `U(pi, phi pi)`, the vertex transpose of the forward polytope. Retrieval
    /// maps are `L J_{phi pi}^{-1}` for `L` in this polytope.
    pub fn retrieval_polytope(&self) -> Result<&TransportationPolytope> {
        self.retrieval
            .get_or_init(|| {
                self.forward_polytope().map(|p| Arc::new(polytope::vertex_transpose_dual(p)))
            })
            .as_deref()
            .map_err(Clone::clone)
    }
}

/// `J_pi phi^T J_{phi pi}^{-1}`.
pub fn bayes_reverse(problem: &RetrievalProblem) -> StochasticMatrix {
    let pi = problem.prior.as_slice();
    let s = problem.image_prior.as_slice();
    let phi = problem.phi.as_matrix();
    let n = problem.dim();
    let m = DMatrix::from_fn(n, n, |i, j| phi[(j, i)] * pi[i] / s[j]);
    StochasticMatrix::new(m).expect("Bayes reverse of a stochastic matrix is stochastic")
}

/// Outcome of one axiom check: whether it holds and the size of the worst
/// violation found.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub holds: bool,
    pub magnitude: f64,
    pub witness: String,
}

impl AxiomCheck {
    fn from_magnitude(magnitude: f64, tol: f64, witness: String) -> Self {
        Self { holds: magnitude <= tol, magnitude, witness }
    }
}

/// The five retrieval axioms evaluated for a candidate map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    /// Nonnegative entries and unit column sums.
    pub stochastic: AxiomCheck,
    /// The candidate is `phi^T` whenever `phi` is a permutation.
    pub permutation_inverse: AxiomCheck,
    /// `candidate * phi` fixes the prior.
    pub fixes_prior: AxiomCheck,
    /// `candidate * phi` is detailed balanced with respect to the prior.
    pub detailed_balance: AxiomCheck,
    /// `candidate * phi` has a real nonnegative spectrum.
    pub nonnegative_spectrum: AxiomCheck,
}

impl AxiomReport {
    pub fn all_hold(&self) -> bool {
        self.checks().iter().all(|c| c.holds)
    }

    pub fn checks(&self) -> [&AxiomCheck; 5] {
        [
            &self.stochastic,
            &self.permutation_inverse,
            &self.fixes_prior,
            &self.detailed_balance,
            &self.nonnegative_spectrum,
        ]
    }
}

/// Evaluates every axiom for `candidate` (which need not be stochastic).
pub fn check_axioms(
    candidate: &DMatrix<f64>,
    problem: &RetrievalProblem,
    tol: f64,
) -> Result<AxiomReport> {
    let n = problem.dim();
    if candidate.shape() != (n, n) {
        return Err(Error::DimensionMismatch { expected: n, found: candidate.nrows() });
    }
    let pi = &problem.prior;

    let mut worst_entry = (0.0f64, 0, 0);
    for i in 0..n {
        for j in 0..n {
            if -candidate[(i, j)] > worst_entry.0 {
                worst_entry = (-candidate[(i, j)], i, j);
            }
        }
    }
    let mut worst_col = (0.0f64, 0);
    for j in 0..n {
        let gap = (candidate.column(j).sum() - 1.0).abs();
        if gap > worst_col.0 {
            worst_col = (gap, j);
        }
    }
    let stochastic = AxiomCheck::from_magnitude(
        worst_entry.0.max(worst_col.0),
        tol,
        format!(
            "most negative entry ({}, {}) by {:e}; column {} off unit sum by {:e}",
            worst_entry.1, worst_entry.2, worst_entry.0, worst_col.1, worst_col.0
        ),
    );

    let permutation_inverse = match problem.phi.as_permutation() {
        Some(_) => {
            let gap = linalg::max_abs_diff(candidate, &problem.phi.as_matrix().transpose());
            AxiomCheck::from_magnitude(gap, tol, format!("max deviation from phi^T {gap:e}"))
        }
        None => AxiomCheck {
            holds: true,
            magnitude: 0.0,
            witness: "forward map is not a permutation".into(),
        },
    };

    let composite = candidate * problem.phi.as_matrix();
    let image = &composite * pi.to_dvector();
    let (fix_gap, fix_idx) = (0..n)
        .map(|i| ((image[i] - pi[i]).abs(), i))
        .fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a });
    let fixes_prior = AxiomCheck::from_magnitude(
        fix_gap,
        tol,
        format!("entry {fix_idx} of the image of the prior is off by {fix_gap:e}"),
    );

    let balance = stochastic::detailed_balance_residual(&composite, pi);
    let detailed_balance = AxiomCheck::from_magnitude(
        balance,
        tol,
        format!("max |M_ij pi_j - M_ji pi_i| = {balance:e}"),
    );

    let spectrum = stochastic::spectrum(&composite, Some(pi), tol)?;
    let min_re = spectrum.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let max_im = spectrum.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let nonnegative_spectrum = AxiomCheck::from_magnitude(
        (-min_re).max(max_im).max(0.0),
        tol,
        format!("smallest real part {min_re:e}, largest imaginary part {max_im:e}"),
    );

    Ok(AxiomReport { stochastic, permutation_inverse, fixes_prior, detailed_balance, nonnegative_spectrum })
}

/// `Gamma = J_pi^{-1/2} candidate phi J_pi^{1/2}`, symmetric exactly when the
/// composition is detailed balanced.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaMatrix {
    pub entries: DMatrix<f64>,
    pub asymmetry: f64,
    pub symmetric: bool,
}

pub fn gamma_matrix(candidate: &DMatrix<f64>, problem: &RetrievalProblem) -> GammaMatrix {
    let j = DiagonalEmbedding::new(&problem.prior);
    let entries = j.power(-0.5) * candidate * problem.phi.as_matrix() * j.power(0.5);
    let asymmetry = linalg::max_asymmetry(&entries);
    GammaMatrix { symmetric: asymmetry <= tol::CHECK, asymmetry, entries }
}

/// Convex weights of `phi J_pi` over the forward polytope.
pub fn forward_coefficients(problem: &RetrievalProblem) -> Result<CoefficientVector> {
    polytope::coefficients_from_map(&problem.phi, problem.forward_polytope()?)
}

/// Reassembles a map from forward weights using the transposed vertices.
/// Applied to [`forward_coefficients`] this reproduces the Bayes reverse.
pub fn coefficient_transform_bayes(
    lambda: &CoefficientVector,
    problem: &RetrievalProblem,
) -> Result<StochasticMatrix> {
    polytope::map_from_coefficients(lambda, problem.retrieval_polytope()?)
}

/// `det(candidate * phi)`.
pub fn composition_determinant(candidate: &StochasticMatrix, problem: &RetrievalProblem) -> f64 {
    (candidate.as_matrix() * problem.phi.as_matrix()).determinant()
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverCertificate {
    pub barrier_stages: usize,
    pub newton_iterations: usize,
    pub final_barrier_weight: f64,
    pub polished: bool,
}

#[derive(Debug, Clone)]
pub struct OptimalRetrieval {
    pub map: StochasticMatrix,
    pub coefficients: CoefficientVector,
    pub determinant: f64,
    pub bayes_determinant: f64,
    pub certificate: SolverCertificate,
}

/// The retrieval map maximizing `det(map * phi)` over all maps satisfying the
/// axioms. The objective `ln det Gamma` is concave on the feasible set, so the
/// interior-point solve returns the global optimum; the convex weights over
/// the retrieval polytope are recovered afterwards as a witness.
pub fn optimal_retrieval(problem: &RetrievalProblem) -> Result<OptimalRetrieval> {
    let bayes = bayes_reverse(problem);
    let bayes_determinant = composition_determinant(&bayes, problem);

    let (map, certificate) = if let Some(perm) = problem.phi.as_permutation() {
        let inverse: Vec<usize> = {
            let mut inv = vec![0; perm.len()];
            for (j, &p) in perm.iter().enumerate() {
                inv[p] = j;
            }
            inv
        };
        let cert = SolverCertificate {
            barrier_stages: 0,
            newton_iterations: 0,
            final_barrier_weight: 0.0,
            polished: false,
        };
        (StochasticMatrix::permutation(&inverse)?, cert)
    } else {
        let outcome = solver::maximize_log_det(
            problem.phi.as_matrix(),
            problem.prior.as_slice(),
            problem.image_prior.as_slice(),
        )?;
        let cert = SolverCertificate {
            barrier_stages: outcome.stages,
            newton_iterations: outcome.iterations,
            final_barrier_weight: outcome.final_mu,
            polished: outcome.polished,
        };
        let mut m = outcome.l;
        for j in 0..m.ncols() {
            let s = m.column(j).sum();
            m.column_mut(j).iter_mut().for_each(|x| *x /= s);
        }
        let candidate = StochasticMatrix::new(m)?;
        // Bayes is always feasible; never report something worse.
        if composition_determinant(&candidate, problem) < bayes_determinant {
            (bayes.clone(), cert)
        } else {
            (candidate, cert)
        }
    };

    let determinant = composition_determinant(&map, problem);
    let coefficients = polytope::coefficients_from_map(&map, problem.retrieval_polytope()?)?;
    Ok(OptimalRetrieval { map, coefficients, determinant, bayes_determinant, certificate })
}
