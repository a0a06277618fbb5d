//! Complete positivity, the quantum retrieval axioms, the Petz map and the
//! identity-optimality conditions.

use nalgebra::DMatrix;
use serde::Serialize;

use super::superop::{j_power, vec, Superoperator};
use super::{DensityMatrix, C64};
use crate::error::{Error, Result};
use crate::linalg;
use crate::retrieval::AxiomCheck;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CptpReport {
    /// `max |tr Phi(E_ij) - delta_ij|`.
    pub trace_residual: f64,
    /// Distance of the Choi matrix from being Hermitian.
    pub choi_anti_hermitian: f64,
    pub choi_min_eigenvalue: f64,
    pub is_cptp: bool,
}

pub fn is_cptp(s: &Superoperator, tol: f64) -> CptpReport {
    let d = s.dim();
    let one = vec(&DMatrix::identity(d, d));
    let row = one.transpose() * s.matrix();
    let trace_residual = row.iter().zip(one.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let choi = s.choi();
    let choi_anti_hermitian = linalg::max_anti_hermitian(&choi);
    let choi_min_eigenvalue = linalg::hermitian_eigenvalues(&choi)[0];
    CptpReport {
        trace_residual,
        choi_anti_hermitian,
        choi_min_eigenvalue,
        is_cptp: trace_residual <= tol && choi_anti_hermitian <= tol && choi_min_eigenvalue >= -tol,
    }
}

/// `max | S J_pi - J_pi S^dagger |`.
pub fn detailed_balance_residual(s: &Superoperator, pi: &DensityMatrix) -> f64 {
    let j = j_power(pi, 1.0);
    linalg::max_abs_diff_c(&(s.matrix() * j.matrix()), &(j.matrix() * s.matrix().adjoint()))
}

/// Spectrum of `s`, computed through the Hermitian similarity
/// `J_pi^{-1/2} S J_pi^{1/2}` when `s` is detailed balanced.
pub fn spectrum(s: &Superoperator, pi: Option<&DensityMatrix>, tol: f64) -> Result<Vec<C64>> {
    if let Some(pi) = pi {
        if detailed_balance_residual(s, pi) <= tol {
            let sim = j_power(pi, -0.5).compose(s).compose(&j_power(pi, 0.5));
            return Ok(linalg::hermitian_eigenvalues(sim.matrix()).into_iter().map(|v| C64::new(v, 0.0)).collect());
        }
    }
    s.eigenvalues()
}

pub fn spectrum_is_nonnegative(s: &Superoperator, pi: Option<&DensityMatrix>, tol: f64) -> Result<bool> {
    Ok(spectrum(s, pi, tol)?.iter().all(|z| z.im.abs() <= tol && z.re >= -tol))
}

fn image_state(phi: &Superoperator, pi: &DensityMatrix) -> Result<DensityMatrix> {
    if phi.dim() != pi.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), found: pi.dim() });
    }
    DensityMatrix::new(phi.apply(pi.matrix()))
        .map_err(|e| Error::Singular(format!("image of the prior is not full rank: {e}")))
}

/// `J_pi Phi^dagger J_{Phi(pi)}^{-1}`.
pub fn petz_map(phi: &Superoperator, pi: &DensityMatrix) -> Result<Superoperator> {
    let sigma = image_state(phi, pi)?;
    Ok(j_power(pi, 1.0).compose(&phi.adjoint()).compose(&j_power(&sigma, -1.0)))
}

/// `J_pi [ (J_sigma^{-1/2} Phi)^dagger (J_sigma^{-1/2} Phi) ]`, which equals
/// `Petz o Phi` and exhibits it as similar to a positive semidefinite map.
pub fn petz_composite_congruence(phi: &Superoperator, pi: &DensityMatrix) -> Result<Superoperator> {
    let sigma = image_state(phi, pi)?;
    let a = j_power(&sigma, -0.5).compose(phi);
    Ok(j_power(pi, 1.0).compose(&a.adjoint().compose(&a)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumAxiomReport {
    pub cptp: AxiomCheck,
    /// The candidate is the inverse whenever `phi` is a unitary channel.
    pub unitary_inverse: AxiomCheck,
    pub fixes_prior: AxiomCheck,
    pub detailed_balance: AxiomCheck,
    pub nonnegative_spectrum: AxiomCheck,
}

impl QuantumAxiomReport {
    pub fn all_hold(&self) -> bool {
        self.checks().iter().all(|c| c.holds)
    }

    pub fn checks(&self) -> [&AxiomCheck; 5] {
        [&self.cptp, &self.unitary_inverse, &self.fixes_prior, &self.detailed_balance, &self.nonnegative_spectrum]
    }
}

fn check(magnitude: f64, tol: f64, witness: String) -> AxiomCheck {
    AxiomCheck { holds: magnitude <= tol, magnitude, witness }
}

pub fn check_quantum_axioms(
    candidate: &Superoperator,
    phi: &Superoperator,
    pi: &DensityMatrix,
    tol: f64,
) -> Result<QuantumAxiomReport> {
    if candidate.dim() != phi.dim() || phi.dim() != pi.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), found: candidate.dim() });
    }
    let c = is_cptp(candidate, tol);
    let cptp = check(
        c.trace_residual.max(c.choi_anti_hermitian).max(-c.choi_min_eigenvalue).max(0.0),
        tol,
        format!(
            "trace residual {:e}, Choi anti-Hermitian part {:e}, smallest Choi eigenvalue {:e}",
            c.trace_residual, c.choi_anti_hermitian, c.choi_min_eigenvalue
        ),
    );

    let unitary_inverse = if phi.is_unitary_channel(tol) {
        let gap = candidate.distance(&phi.adjoint());
        check(gap, tol, format!("distance from the inverse unitary channel {gap:e}"))
    } else {
        AxiomCheck { holds: true, magnitude: 0.0, witness: "forward map is not a unitary channel".into() }
    };

    let composite = candidate.compose(phi);
    let fix = linalg::max_abs_diff_c(&composite.apply(pi.matrix()), pi.matrix());
    let fixes_prior = check(fix, tol, format!("composition moves the prior by {fix:e}"));

    let balance = detailed_balance_residual(&composite, pi);
    let detailed_balance = check(balance, tol, format!("max |M J - J M^dagger| = {balance:e}"));

    let ev = spectrum(&composite, Some(pi), tol)?;
    let min_re = ev.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let max_im = ev.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let nonnegative_spectrum = check(
        (-min_re).max(max_im).max(0.0),
        tol,
        format!("smallest real part {min_re:e}, largest imaginary part {max_im:e}"),
    );

    Ok(QuantumAxiomReport { cptp, unitary_inverse, fixes_prior, detailed_balance, nonnegative_spectrum })
}

/// Whether the identity is the optimal retrieval: `phi` fixes the prior, is
/// detailed balanced with respect to it, and has a nonnegative spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremOutcome {
    pub prior_fixed: bool,
    pub detailed_balance: bool,
    pub nonnegative_spectrum: bool,
    pub holds: bool,
    /// `det(phi)`, the determinant reached by the identity, when `holds`.
    pub optimal_determinant: Option<f64>,
}

pub fn theorem_conditions(phi: &Superoperator, pi: &DensityMatrix, tol: f64) -> Result<TheoremOutcome> {
    if phi.dim() != pi.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), found: pi.dim() });
    }
    let prior_fixed = linalg::max_abs_diff_c(&phi.apply(pi.matrix()), pi.matrix()) <= tol;
    let detailed_balance = detailed_balance_residual(phi, pi) <= tol;
    let nonnegative_spectrum = spectrum_is_nonnegative(phi, Some(pi), tol)?;
    let holds = prior_fixed && detailed_balance && nonnegative_spectrum;
    Ok(TheoremOutcome {
        prior_fixed,
        detailed_balance,
        nonnegative_spectrum,
        holds,
        optimal_determinant: holds.then(|| phi.determinant().re),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChoiMarginalReport {
    pub choi_min_eigenvalue: f64,
    /// `| d tr_A C - sigma |`.
    pub output_residual: f64,
    /// `| d tr_B C - pi^T |`.
    pub input_residual: f64,
    pub holds: bool,
}

/// Marginal conditions on the Choi matrix of `lambda = Phi J_pi`: the output
/// marginal is `sigma = Phi(pi)` and the input marginal is `pi^T`, both up to
/// the factor `d` of the normalized Choi matrix.
pub fn choi_marginal_check(
    lambda: &Superoperator,
    sigma: &DMatrix<C64>,
    pi: &DMatrix<C64>,
    tol: f64,
) -> ChoiMarginalReport {
    let d = lambda.dim();
    let c = lambda.choi() * C64::new(d as f64, 0.0);
    let tr_a = DMatrix::from_fn(d, d, |a, b| (0..d).map(|i| c[(i * d + a, i * d + b)]).sum::<C64>());
    let tr_b = DMatrix::from_fn(d, d, |i, j| (0..d).map(|a| c[(i * d + a, j * d + a)]).sum::<C64>());
    let choi_min_eigenvalue = linalg::hermitian_eigenvalues(&c)[0];
    let output_residual = linalg::max_abs_diff_c(&tr_a, sigma);
    let input_residual = linalg::max_abs_diff_c(&tr_b, &pi.transpose());
    ChoiMarginalReport {
        choi_min_eigenvalue,
        output_residual,
        input_residual,
        holds: choi_min_eigenvalue >= -tol && output_residual <= tol && input_residual <= tol,
    }
}

/// Sufficient condition for a channel to be extreme among CPTP maps: the
/// products `K_i^dagger K_j` are linearly independent.
pub fn kraus_vertex_certificate(kraus: &[DMatrix<C64>], tol: f64) -> bool {
    let k = kraus.len();
    if k == 0 {
        return false;
    }
    let d = kraus[0].nrows();
    if k * k > d * d {
        return false;
    }
    let cols: Vec<_> = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| vec(&(kraus[i].adjoint() * &kraus[j])))
        .collect();
    let m = DMatrix::from_columns(&cols);
    let sv = m.svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().all(|&s| s > tol * max.max(1.0))
}
