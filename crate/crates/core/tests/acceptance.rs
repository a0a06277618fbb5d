//! Acceptance gate: one PASS/FAIL line per criterion, then a single assertion
//! that every criterion passed.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng;
use state_retrieval::polytope;
use state_retrieval::quality::{self, SimplexSampler};
use state_retrieval::quantum::axioms::{check_quantum_axioms, petz_map, theorem_conditions};
use state_retrieval::quantum::contrast::{self, DensitySampler};
use state_retrieval::quantum::{channels, DensityMatrix, Superoperator, C64};
use state_retrieval::retrieval::oracle::brute_force_optimal;
use state_retrieval::retrieval::{
    bayes_reverse, check_axioms, composition_determinant, optimal_retrieval, RetrievalProblem,
};
use state_retrieval::stochastic::{ProbabilityVector, StochasticMatrix};
use state_retrieval::{involution, random};

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(start: Instant, limit: Duration) -> (bool, String) {
    let e = start.elapsed();
    (e <= limit, format!("{:.2}s of {}s", e.as_secs_f64(), limit.as_secs()))
}

fn pv(x: &[f64]) -> ProbabilityVector {
    ProbabilityVector::new(x.to_vec()).unwrap()
}

/// 50 random instances per dimension 2..=5.
fn classical_instances() -> Vec<RetrievalProblem> {
    let mut rng = random::rng(20_240_601);
    (2..=5)
        .flat_map(|n| std::iter::repeat_n(n, 50))
        .map(|n| {
            let phi = random::stochastic_matrix(&mut rng, n);
            let prior = random::probability_vector(&mut rng, n);
            RetrievalProblem::new(phi, prior).unwrap()
        })
        .collect()
}

fn criterion_1(instances: &[RetrievalProblem]) -> Outcome {
    let start = Instant::now();
    let failures = instances
        .iter()
        .filter(|p| !check_axioms(bayes_reverse(p).as_matrix(), p, 1e-9).unwrap().all_hold())
        .count();
    let (fast, time) = within(start, Duration::from_secs(10));
    outcome(failures == 0 && fast, format!("{} instances, {failures} failing; {time}", instances.len()))
}

fn criterion_2(instances: &[RetrievalProblem]) -> Outcome {
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    let mut strict = [false; 4];
    let mut errors = 0;
    for p in instances {
        match optimal_retrieval(p) {
            Ok(o) => {
                let gap = composition_determinant(&o.map, p) - composition_determinant(&bayes_reverse(p), p);
                worst = worst.min(gap);
                if gap > 1e-6 {
                    strict[p.dim() - 2] = true;
                }
            }
            Err(_) => errors += 1,
        }
    }
    outcome(
        errors == 0 && worst >= -1e-9 && strict.iter().all(|&s| s),
        format!(
            "min det gain {worst:.3e}; strict gain per dim 2..5 {strict:?}; {errors} solver errors; {:.2}s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = random::rng(31_337);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 50 {
        let problem = if checked % 2 == 0 {
            RetrievalProblem::new(random::stochastic_matrix(&mut rng, 2), random::probability_vector(&mut rng, 2))
        } else {
            RetrievalProblem::new(random::doubly_stochastic_matrix(&mut rng, 3, 4), ProbabilityVector::uniform(3))
        }
        .unwrap();
        if problem.retrieval_polytope().unwrap().vertex_count() > 6 {
            continue;
        }
        let solved = optimal_retrieval(&problem).unwrap().determinant;
        let oracle = brute_force_optimal(&problem, 1e-3).unwrap().determinant;
        worst = worst.max((solved - oracle).abs());
        checked += 1;
    }
    let (fast, time) = within(start, Duration::from_secs(300));
    outcome(worst <= 1e-4 && fast, format!("{checked} instances, max |det gap| {worst:.3e}; {time}"))
}

fn criterion_4() -> Outcome {
    let mut rng = random::rng(4_004);
    let grid = quality::two_state_grid(99);
    let mut worst = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    for trial in 0..20 {
        let p = RetrievalProblem::new(random::stochastic_matrix(&mut rng, 2), random::probability_vector(&mut rng, 2))
            .unwrap();
        let opt = optimal_retrieval(&p).unwrap().map;
        let bayes = bayes_reverse(&p);
        let co = quality::recovery_curve(&opt, p.phi(), &grid).unwrap();
        let cb = quality::recovery_curve(&bayes, p.phi(), &grid).unwrap();
        let excess = co.iter().zip(&cb).map(|(o, b)| o - b).fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(excess);
        if excess > 1e-8 {
            violations.push(trial);
        }
    }
    outcome(
        violations.is_empty(),
        format!("max (optimal - bayes) over 20 curves {worst:.3e}; violating instances {violations:?}"),
    )
}

fn criterion_5() -> Outcome {
    let phi = StochasticMatrix::from_rows(&[vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap();
    let p = RetrievalProblem::new(phi, pv(&[0.5, 0.5])).unwrap();
    let o = optimal_retrieval(&p).unwrap();
    let dist = (o.map.as_matrix() - DMatrix::identity(2, 2)).amax();
    let pass = dist <= 1e-9 && (o.determinant - 0.5).abs() <= 1e-9 && (o.bayes_determinant - 0.25).abs() <= 1e-9;
    outcome(pass, format!("|map - I| {dist:.1e}, det {:.12}, bayes det {:.12}", o.determinant, o.bayes_determinant))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut theorem_ok = true;
    for d in [2, 3] {
        let pi = DensityMatrix::maximally_mixed(d);
        for eta in [0.1, 0.5, 0.9] {
            let phi = channels::depolarizing(eta, d).unwrap();
            let petz = petz_map(&phi, &pi).unwrap();
            worst = worst.max(petz.distance(&phi));
            let t = theorem_conditions(&phi, &pi, 1e-9).unwrap();
            let identity_ok = t
                .optimal_determinant
                .is_some_and(|det| (det - Superoperator::identity(d).compose(&phi).determinant().re).abs() < 1e-12);
            theorem_ok &= t.holds && identity_ok;
        }
    }
    let (fast, time) = within(start, Duration::from_secs(10));
    outcome(
        worst <= 1e-12 && theorem_ok && fast,
        format!("max |petz - phi| {worst:.1e}; theorem holds with identity optimum: {theorem_ok}; {time}"),
    )
}

fn criterion_7() -> Outcome {
    let (l1, l2, be) = (0.3, 0.6, 1.0);
    let phi = channels::thermal_swap(l1, l2, be).unwrap();
    let pi = channels::thermal_swap_prior(be).unwrap();
    let petz = petz_map(&phi, &pi).unwrap();
    let petz_gap = petz.distance(&phi);
    let swap = channels::swap(2);
    let swap_axioms = check_quantum_axioms(&swap, &phi, &pi, 1e-9).unwrap().all_hold();
    let det_swap = swap.compose(&phi).determinant().re;
    let det_petz = petz.compose(&phi).determinant().re;
    let id = check_quantum_axioms(&Superoperator::identity(4), &phi, &pi, 1e-9).unwrap();
    let identity_fails = !id.detailed_balance.holds || !id.nonnegative_spectrum.holds;
    let clauses = [petz_gap <= 1e-10, swap_axioms && det_swap > det_petz, identity_fails];
    outcome(
        clauses.iter().all(|&c| c),
        format!(
            "petz = phi: {} (max gap {petz_gap:.3e}); swap feasible and better: {} (det {det_swap:.4e} vs petz {det_petz:.4e}); identity fails q4/q5: {}",
            clauses[0], clauses[1], clauses[2]
        ),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let a = involution::psd_scan(&pv(&[0.1, 0.2, 0.7]), &pv(&[0.3, 0.6, 0.1]), 1e-10).unwrap();
    let b = involution::psd_scan(&pv(&[0.1, 0.6, 0.1, 0.2]), &pv(&[0.1, 0.2, 0.3, 0.4]), 1e-10).unwrap();
    let a_ok = a.diagonal_passes() && a.joint_off_diagonal().is_empty();
    let b_ok = !b.x_off_diagonal().is_empty()
        && !b.y_off_diagonal().is_empty()
        && b.diagonal_passes()
        && b.joint_off_diagonal().is_empty();
    let (fast, time) = within(start, Duration::from_secs(30));
    outcome(
        a_ok && b_ok && fast,
        format!(
            "3-state: {} vertices, joint off-diagonal {}; 4-state: {} vertices, X-only {}, Y-only {}, joint {}; {time}",
            a.vertex_count,
            a.joint_off_diagonal().len(),
            b.vertex_count,
            b.x_off_diagonal().len(),
            b.y_off_diagonal().len(),
            b.joint_off_diagonal().len()
        ),
    )
}

fn random_delta<R: Rng>(rng: &mut R, n: usize, l1: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = raw.iter().map(|x| x - mean).collect();
    let norm: f64 = centered.iter().map(|x| x.abs()).sum();
    centered.iter().map(|x| x * l1 / norm).collect()
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let mut rng = random::rng(909);
    let mut violations = Vec::new();
    let mut checked = 0;
    for trial in 0..100 {
        let n = 2 + trial % 2;
        let p = RetrievalProblem::new(random::stochastic_matrix(&mut rng, n), random::probability_vector(&mut rng, n))
            .unwrap();
        let retrieval = if trial % 4 < 2 { optimal_retrieval(&p).unwrap().map } else { bayes_reverse(&p) };
        let sampler = SimplexSampler::new(n, 2_000, trial as u64).unwrap();
        let delta = random_delta(&mut rng, n, 1e-4);
        let reports = [
            ("determinant", quality::determinant_bound_report(&retrieval, p.phi(), &sampler)),
            ("local", quality::local_prior_bound_report(&retrieval, p.phi(), p.prior(), &delta)),
            ("contraction", quality::contraction_bound_report(&retrieval, p.phi(), &SimplexSampler { sample_count: 500, ..sampler })),
        ];
        for (name, r) in reports {
            checked += 1;
            match r {
                Ok(r) if r.holds => {}
                Ok(r) => violations.push(format!("classical {name} #{trial}: slack {:.3e}", r.slack)),
                Err(e) => violations.push(format!("classical {name} #{trial}: {e}")),
            }
        }
    }
    for trial in 0..100 {
        let kraus = random::kraus_operators(&mut rng, 2, 2);
        let phi = Superoperator::from_kraus(&kraus).unwrap();
        let pi = DensityMatrix::new(random::density_matrix(&mut rng, 2)).unwrap();
        let petz = petz_map(&phi, &pi).unwrap();
        let h = random::complex_gaussian(&mut rng, 2, 2);
        let mut delta = (&h + h.adjoint()) * C64::new(0.5, 0.0);
        let shift = delta.trace() * C64::new(0.5, 0.0);
        delta -= DMatrix::identity(2, 2) * shift;
        let norm = state_retrieval::linalg::trace_norm_hermitian(&delta);
        delta *= C64::new(1e-4 / norm, 0.0);
        let sampler = DensitySampler { dim: 2, sample_count: 200, seed: trial as u64 };
        let reports = [
            ("local", contrast::local_bound_report(&petz, &phi, &pi, &delta)),
            ("contraction", contrast::contraction_bound_report(&petz, &phi, &sampler)),
        ];
        for (name, r) in reports {
            checked += 1;
            match r {
                Ok(r) if r.holds => {}
                Ok(r) => violations.push(format!("quantum {name} #{trial}: slack {:.3e}", r.slack)),
                Err(e) => violations.push(format!("quantum {name} #{trial}: {e}")),
            }
        }
    }
    let (fast, time) = within(start, Duration::from_secs(120));
    let shown: Vec<_> = violations.iter().take(5).cloned().collect();
    outcome(
        violations.is_empty() && fast,
        format!("{checked} reports, {} violations {shown:?}; {time}", violations.len()),
    )
}

fn criterion_10() -> Outcome {
    let mut rng = random::rng(1_010);
    let phi = random::stochastic_matrix(&mut rng, 2);
    let sampler = SimplexSampler::new(2, 20_000, 10).unwrap();
    let are = quality::average_re_minimizer(&phi, &sampler).unwrap().map;
    let grid = quality::two_state_grid(99);
    let gap = |prior: ProbabilityVector| {
        let p = RetrievalProblem::new(phi.clone(), prior).unwrap();
        let opt = optimal_retrieval(&p).unwrap().map;
        let a = quality::recovery_curve(&opt, &phi, &grid).unwrap();
        let b = quality::recovery_curve(&are, &phi, &grid).unwrap();
        a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    };
    let fixed = quality::fixed_point(&are.compose(&phi)).unwrap();
    let matched = gap(fixed.clone());
    let mut other = random::probability_vector(&mut rng, 2);
    while (other[0] - fixed[0]).abs() < 0.1 {
        other = random::probability_vector(&mut rng, 2);
    }
    let differs = gap(other);
    outcome(
        matched <= 1e-3 && differs > 1e-3,
        format!("fixed-point prior: max curve gap {matched:.3e}; other prior: {differs:.3e}"),
    )
}

fn criterion_11() -> Outcome {
    let start = Instant::now();
    let counts: Vec<usize> = [2usize, 3, 4]
        .iter()
        .map(|&n| {
            let u = ProbabilityVector::uniform(n);
            polytope::enumerate_vertices(&u, &u).unwrap().vertex_count()
        })
        .collect();
    let p = polytope::enumerate_vertices(&pv(&[0.75, 0.25]), &pv(&[0.5, 0.5])).unwrap();
    let expected = [
        DMatrix::from_row_slice(2, 2, &[0.5, 0.25, 0.0, 0.25]),
        DMatrix::from_row_slice(2, 2, &[0.25, 0.5, 0.25, 0.0]),
    ];
    let two_state = p.vertex_count() == 2
        && expected.iter().all(|e| p.vertices().iter().any(|v| (v - e).amax() < 1e-12));
    let (fast, time) = within(start, Duration::from_secs(5));
    outcome(
        counts == [2, 6, 24] && two_state && fast,
        format!("uniform counts {counts:?}; two-state vertices match: {two_state}; {time}"),
    )
}

#[test]
fn acceptance() {
    let instances = classical_instances();
    let criteria: Vec<Criterion> = vec![
        ("bayes axiom compliance", Box::new(|| criterion_1(&instances))),
        ("determinant dominance", Box::new(|| criterion_2(&instances))),
        ("solver-oracle agreement", Box::new(criterion_3)),
        ("two-state recovery curves", Box::new(criterion_4)),
        ("classical identity optimum", Box::new(criterion_5)),
        ("depolarizing case", Box::new(criterion_6)),
        ("thermal swap case", Box::new(criterion_7)),
        ("pairwise psd scan", Box::new(criterion_8)),
        ("bound suite", Box::new(criterion_9)),
        ("average-entropy comparison", Box::new(criterion_10)),
        ("vertex enumeration", Box::new(criterion_11)),
    ];
    let mut failed = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("{} criterion {:>2} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
        if !o.pass {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
