//! Small closed-form instances with frozen values. Quantum bound values were
//! produced by an independent dense-matrix evaluation and copied here.

use approx::assert_relative_eq;
use nalgebra::DMatrix;

use state_retrieval::{involution, linalg};
use state_retrieval::polytope::{self, CoefficientVector};
use state_retrieval::quality;
use state_retrieval::quantum::axioms::{detailed_balance_residual, theorem_conditions};
use state_retrieval::quantum::channels::{self, pauli};
use state_retrieval::quantum::contrast::local_bound_report;
use state_retrieval::quantum::state::{bloch_operator, trace_distance};
use state_retrieval::quantum::superop::j_power;
use state_retrieval::quantum::{DensityMatrix, Superoperator, C64};
use state_retrieval::retrieval::{bayes_reverse, check_axioms, gamma_matrix, RetrievalProblem};
use state_retrieval::stochastic::{self, kernels, ProbabilityVector, StochasticMatrix};

fn pv(x: &[f64]) -> ProbabilityVector {
    ProbabilityVector::new(x.to_vec()).unwrap()
}

fn m2(rows: [[f64; 2]; 2]) -> StochasticMatrix {
    StochasticMatrix::from_rows(&[rows[0].to_vec(), rows[1].to_vec()]).unwrap()
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[test]
fn push_forward_of_uniform() {
    let out = stochastic::apply(&m2([[1.0, 0.5], [0.0, 0.5]]), &pv(&[0.5, 0.5])).unwrap();
    assert_relative_eq!(out.as_slice()[0], 0.75, epsilon = 1e-15);
    assert_relative_eq!(out.as_slice()[1], 0.25, epsilon = 1e-15);
}

#[test]
fn relative_entropy_two_state() {
    let (a, b) = (pv(&[0.5, 0.5]), pv(&[0.75, 0.25]));
    let expected = 0.5 * (0.5f64 / 0.75).ln() + 0.5 * (0.5f64 / 0.25).ln();
    let d = stochastic::relative_entropy(&a, &b).unwrap();
    assert_relative_eq!(d, expected, epsilon = 1e-15);
    assert_relative_eq!(stochastic::csiszar_contrast(kernels::kullback_leibler, &a, &b).unwrap(), d, epsilon = 1e-15);
}

#[test]
fn stochasticity_and_balance_checks() {
    let m = m2([[1.0, 0.5], [0.0, 0.5]]);
    assert!(stochastic::is_left_stochastic(m.as_matrix(), 1e-12));
    let inv = DMatrix::from_row_slice(2, 2, &[1.5, -0.5, -0.5, 1.5]);
    assert!(!stochastic::is_left_stochastic(&inv, 1e-12));
    assert!(!stochastic::is_detailed_balanced(m.as_matrix(), &pv(&[0.5, 0.5]), 1e-12));
}

#[test]
fn two_state_polytope_and_dual() {
    let p = polytope::enumerate_vertices(&pv(&[0.75, 0.25]), &pv(&[0.5, 0.5])).unwrap();
    assert_eq!(p.vertex_count(), 2);
    assert_eq!(involution::order_vertices_permutations_first(&p).1, 0);
    let dual = polytope::vertex_transpose_dual(&p);
    let t = DMatrix::from_row_slice(2, 2, &[0.25, 0.25, 0.5, 0.0]);
    let v = dual.vertices().iter().find(|v| (*v - &t).amax() < 1e-15).expect("transposed vertex");
    assert_relative_eq!(v.row(0).sum(), 0.5);
    assert_relative_eq!(v.column(0).sum(), 0.75);
}

#[test]
fn scaled_birkhoff_midpoint_is_fully_mixing() {
    let u = pv(&[0.5, 0.5]);
    let p = polytope::enumerate_vertices(&u, &u).unwrap();
    let m = polytope::map_from_coefficients(&CoefficientVector::new(vec![0.5, 0.5]).unwrap(), &p).unwrap();
    assert!((m.as_matrix() - DMatrix::from_element(2, 2, 0.5)).amax() < 1e-15);
}

#[test]
fn bayes_reverse_of_erasure_like_map() {
    let p = RetrievalProblem::new(m2([[1.0, 0.5], [0.0, 0.5]]), pv(&[0.5, 0.5])).unwrap();
    let b = bayes_reverse(&p);
    let expected = DMatrix::from_row_slice(2, 2, &[2.0 / 3.0, 0.0, 1.0 / 3.0, 1.0]);
    assert!((b.as_matrix() - &expected).amax() < 1e-15);
    let g = gamma_matrix(b.as_matrix(), &p);
    assert!(g.symmetric);
    assert_relative_eq!(g.entries.determinant(), 1.0 / 3.0, epsilon = 1e-14);
}

#[test]
fn identity_candidate_for_symmetric_channel() {
    let phi = m2([[0.75, 0.25], [0.25, 0.75]]);
    let p = RetrievalProblem::new(phi.clone(), pv(&[0.5, 0.5])).unwrap();
    assert!(check_axioms(&DMatrix::identity(2, 2), &p, 1e-9).unwrap().all_hold());
    let e = quality::identity_relative_entropy(&StochasticMatrix::identity(2), &phi).unwrap();
    assert_relative_eq!(e, 2f64.ln(), epsilon = 1e-14);
}

#[test]
fn dual_scan_tables_coincide() {
    let p = polytope::enumerate_vertices(&pv(&[0.3, 0.6, 0.1]), &pv(&[0.1, 0.2, 0.7])).unwrap();
    let dual = polytope::vertex_transpose_dual(&p);
    for i in 0..p.vertex_count() {
        let x = involution::compute_x(&p, i, i);
        assert!((&x - x.transpose()).amax() <= 1e-12);
        for j in 0..p.vertex_count() {
            assert!((involution::compute_y(&p, i, j) - involution::compute_x(&dual, j, i)).amax() < 1e-12);
        }
    }
}

#[test]
fn j_map_scales_matrix_units() {
    let pi = DensityMatrix::diagonal(&[0.2, 0.8]).unwrap();
    let j = j_power(&pi, 1.0);
    for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let mut e = DMatrix::zeros(2, 2);
        e[(a, b)] = c(1.0);
        let out = j.apply(&e);
        let p: [f64; 2] = [0.2, 0.8];
        assert_relative_eq!(out[(a, b)].re, (p[a] * p[b]).sqrt(), epsilon = 1e-15);
        assert!(out.iter().map(|z| z.norm()).sum::<f64>() - (p[a] * p[b]).sqrt() < 1e-15);
    }
}

#[test]
fn unitary_conjugations_break_balance() {
    let pi = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
    // Hadamard does not commute with pi.
    let h = DMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(1.0), c(-1.0)]) * c(std::f64::consts::FRAC_1_SQRT_2);
    assert!(detailed_balance_residual(&Superoperator::unitary(&h).unwrap(), &pi) > 1e-3);
    // A phase rotation fixes pi, yet is not balanced with respect to it.
    let phase = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), C64::from_polar(1.0, 0.7)]));
    let u = Superoperator::unitary(&phase).unwrap();
    assert!(linalg::max_abs_diff_c(&u.apply(pi.matrix()), pi.matrix()) < 1e-15);
    assert!(!theorem_conditions(&u, &pi, 1e-9).unwrap().holds);
}

#[test]
fn thermal_swap_fixes_product_prior_but_fails_theorem() {
    let phi = channels::thermal_swap(0.3, 0.6, 1.0).unwrap();
    let pi = channels::thermal_swap_prior(1.0).unwrap();
    assert!(linalg::max_abs_diff_c(&phi.apply(pi.matrix()), pi.matrix()) < 1e-14);
    let t = theorem_conditions(&phi, &pi, 1e-9).unwrap();
    assert!(t.prior_fixed && !t.holds);
}

#[test]
fn depolarizing_local_bounds() {
    let eta = 0.5;
    let phi = channels::depolarizing(eta, 2).unwrap();
    let pi = DensityMatrix::maximally_mixed(2);
    let delta = pauli(1) * c(0.5e-4);
    let id = local_bound_report(&Superoperator::identity(2), &phi, &pi, &delta).unwrap();
    assert_relative_eq!(id.lhs, 1.250_000_007_421_875_4e-9, max_relative = 1e-6);
    assert_relative_eq!(id.rhs, 5.198_603_873_694_355e-9, max_relative = 1e-6);
    assert!(id.holds && id.slack > 0.0);
    let petz = local_bound_report(&phi, &phi, &pi, &delta).unwrap();
    assert_relative_eq!(petz.lhs, 2.812_500_012_963_868_6e-9, max_relative = 1e-6);
    assert_relative_eq!(petz.rhs, 1.039_720_774_738_871e-8, max_relative = 1e-6);
    assert!(petz.holds && petz.rhs > id.rhs);
}

#[test]
fn depolarizing_trace_distance() {
    let phi = channels::depolarizing(0.5, 2).unwrap();
    let rho = bloch_operator([0.6, 0.0, 0.0]);
    assert_relative_eq!(trace_distance(&rho, &phi.apply(&rho)), 0.15, epsilon = 1e-14);
}
