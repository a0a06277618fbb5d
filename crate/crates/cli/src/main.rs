mod instance;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde_json::json;
use state_retrieval::quantum::axioms::{check_quantum_axioms, petz_map, theorem_conditions};
use state_retrieval::quantum::figures::{figure_sweep, Cell, FigureCase};
use state_retrieval::quantum::qubit::qubit_optimal_retrieval;
use state_retrieval::quantum::{channels, DensityMatrix, Superoperator};
use state_retrieval::quality::{self, SimplexSampler};
use state_retrieval::retrieval::{bayes_reverse, check_axioms, optimal_retrieval};
use state_retrieval::stochastic::ProbabilityVector;
use state_retrieval::{involution, polytope, random, tol};

use instance::Instance;
use output::{emit, emit_json, rows, CONVENTION};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] state_retrieval::Error),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("cannot parse {0}: {1}")]
    Parse(String, String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_non_convergence() => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "state-retrieval", version, about = "Retrieval maps for classical and quantum channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
struct Common {
    /// Instance file (JSON).
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for sampled quantities; overrides the instance seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Vertices of the transportation polytope U(sigma, pi).
    Vertices {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        pi: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        sigma: Option<Vec<f64>>,
    },
    /// Bayes reverse and its axiom report.
    Bayes {
        #[command(flatten)]
        common: Common,
    },
    /// Determinant-maximizing retrieval map.
    Optimal {
        #[command(flatten)]
        common: Common,
    },
    /// Axiom report for the instance `candidate`, or for the Bayes and
    /// optimal maps when none is given.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = tol::CHECK)]
        tol: f64,
    },
    /// Determinant, local and contraction bounds for the Bayes and optimal maps.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Two-state recovery curves (CSV).
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 99)]
        grid: usize,
    },
    /// Average-relative-entropy minimizer compared with the optimal map.
    Are {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 99)]
        grid: usize,
    },
    /// Pairwise positivity scan over polytope vertices.
    InvolutionScan {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        pi: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        sigma: Option<Vec<f64>>,
        #[arg(long, default_value_t = tol::PSD)]
        tol: f64,
    },
    /// Quantum channels.
    Quantum {
        #[command(subcommand)]
        command: QuantumCommand,
    },
}

#[derive(Debug, Subcommand)]
enum QuantumCommand {
    /// Petz map and its axiom report.
    Petz {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = tol::CHECK)]
        tol: f64,
    },
    /// Theorem conditions, Petz map and the best known retrieval.
    CaseStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = tol::CHECK)]
        tol: f64,
    },
    /// Figure data (CSV); the scalar summary goes to stderr.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 21)]
        grid: usize,
    },
}

fn load(common: &Common) -> Result<Instance, CliError> {
    match &common.instance {
        Some(p) => Instance::read(p),
        None => Err(CliError::Usage("--instance is required".into())),
    }
}

fn seed(common: &Common, inst: &Instance) -> Result<u64, CliError> {
    common
        .seed
        .or(inst.seed)
        .ok_or_else(|| CliError::Usage("a seed is required: pass --seed or set `seed` in the instance".into()))
}

fn samples(flag: Option<usize>, inst: &Instance) -> usize {
    flag.or(inst.sample_count).unwrap_or(10_000)
}

fn margins(
    common: &Common,
    pi: &Option<Vec<f64>>,
    sigma: &Option<Vec<f64>>,
) -> Result<(ProbabilityVector, ProbabilityVector), CliError> {
    match (pi, sigma) {
        (Some(p), Some(s)) => Ok((ProbabilityVector::new(p.clone())?, ProbabilityVector::new(s.clone())?)),
        (None, None) => {
            let problem = load(common)?.problem()?;
            Ok((problem.prior().clone(), problem.image_prior().clone()))
        }
        _ => Err(CliError::Usage("--pi and --sigma must be given together".into())),
    }
}

fn out(common: &Common) -> Option<&Path> {
    common.out.as_deref()
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Vertices { common, pi, sigma } => {
            let (pi, sigma) = margins(&common, &pi, &sigma)?;
            let p = polytope::enumerate_vertices(&sigma, &pi)?;
            emit_json(
                out(&common),
                &json!({
                    "convention": CONVENTION,
                    "row_sums": sigma,
                    "column_sums": pi,
                    "vertex_count": p.vertex_count(),
                    "permutation_count": p.permutation_prefix_len(),
                    "vertices": p.vertices().iter().map(rows).collect::<Vec<_>>(),
                }),
            )
        }
        Command::Bayes { common } => {
            let problem = load(&common)?.problem()?;
            let b = bayes_reverse(&problem);
            let report = check_axioms(b.as_matrix(), &problem, tol::CHECK)?;
            emit_json(
                out(&common),
                &json!({
                    "convention": CONVENTION,
                    "map": rows(b.as_matrix()),
                    "determinant": (b.as_matrix() * problem.phi().as_matrix()).determinant(),
                    "axioms": report,
                }),
            )
        }
        Command::Optimal { common } => {
            let problem = load(&common)?.problem()?;
            let o = optimal_retrieval(&problem)?;
            let report = check_axioms(o.map.as_matrix(), &problem, tol::CHECK)?;
            emit_json(
                out(&common),
                &json!({
                    "convention": CONVENTION,
                    "map": rows(o.map.as_matrix()),
                    "determinant": o.determinant,
                    "bayes_determinant": o.bayes_determinant,
                    "coefficients": o.coefficients.as_slice(),
                    "retrieval_vertices": problem.retrieval_polytope()?.vertices().iter().map(rows).collect::<Vec<_>>(),
                    "certificate": o.certificate,
                    "axioms": report,
                }),
            )
        }
        Command::Check { common, tol } => {
            let inst = load(&common)?;
            let problem = inst.problem()?;
            let value = match &inst.candidate {
                Some(c) => {
                    let n = c.len();
                    if c.iter().any(|r| r.len() != n) {
                        return Err(CliError::Usage("candidate must be a square matrix".into()));
                    }
                    let m = DMatrix::from_fn(n, n, |i, j| c[i][j]);
                    json!({ "convention": CONVENTION, "candidate": check_axioms(&m, &problem, tol)? })
                }
                None => {
                    let b = bayes_reverse(&problem);
                    let o = optimal_retrieval(&problem)?;
                    json!({
                        "convention": CONVENTION,
                        "bayes": check_axioms(b.as_matrix(), &problem, tol)?,
                        "optimal": check_axioms(o.map.as_matrix(), &problem, tol)?,
                    })
                }
            };
            emit_json(out(&common), &value)
        }
        Command::Bounds { common, samples: flag } => {
            let inst = load(&common)?;
            let problem = inst.problem()?;
            let seed = seed(&common, &inst)?;
            let n = problem.dim();
            let sampler = SimplexSampler::new(n, samples(flag, &inst), seed)?;
            let delta = local_perturbation(n, seed, 1e-4);
            let maps = [("bayes", bayes_reverse(&problem)), ("optimal", optimal_retrieval(&problem)?.map)];
            let mut reports = serde_json::Map::new();
            for (name, m) in &maps {
                reports.insert(
                    (*name).into(),
                    json!({
                        "average_recovery_error": quality::average_recovery_error(m, problem.phi(), &sampler)?,
                        "determinant": quality::determinant_bound_report(m, problem.phi(), &sampler)?,
                        "local_prior": quality::local_prior_bound_report(m, problem.phi(), problem.prior(), &delta)?,
                        "contraction": quality::contraction_bound_report(m, problem.phi(), &sampler)?,
                    }),
                );
            }
            emit_json(
                out(&common),
                &json!({ "convention": CONVENTION, "seed": seed, "samples": sampler.sample_count, "perturbation": delta, "reports": reports }),
            )
        }
        Command::Sweep { common, grid } => {
            let problem = load(&common)?.problem()?;
            if problem.dim() != 2 {
                return Err(CliError::Usage("sweep needs a two-state instance".into()));
            }
            let points = quality::two_state_grid(grid);
            let b = quality::recovery_curve(&bayes_reverse(&problem), problem.phi(), &points)?;
            let o = quality::recovery_curve(&optimal_retrieval(&problem)?.map, problem.phi(), &points)?;
            let body = output::csv(
                &["rho", "D_bayes", "D_optimal"].map(String::from),
                points.iter().zip(b.iter().zip(&o)).map(|(p, (b, o))| {
                    vec![output::number(p[0]), output::number(*b), output::number(*o)]
                }),
            );
            emit(out(&common), &body)
        }
        Command::Are { common, samples: flag, grid } => {
            let inst = load(&common)?;
            let phi = inst.phi()?;
            let seed = seed(&common, &inst)?;
            let sampler = SimplexSampler::new(phi.dim(), samples(flag, &inst), seed)?;
            let are = quality::average_re_minimizer(&phi, &sampler)?;
            let fixed = quality::fixed_point(&are.map.compose(&phi))?;
            let mut value = json!({
                "convention": CONVENTION,
                "seed": seed,
                "samples": sampler.sample_count,
                "map": rows(are.map.as_matrix()),
                "objective": are.objective,
                "iterations": are.history.len(),
                "fixed_point": fixed,
            });
            let priors = [("fixed_point_prior", Some(fixed)), ("instance_prior", inst.pi.clone().map(ProbabilityVector::new).transpose()?)];
            for (key, prior) in priors {
                let Some(prior) = prior else { continue };
                let problem = state_retrieval::RetrievalProblem::new(phi.clone(), prior.clone())?;
                let opt = optimal_retrieval(&problem)?.map;
                let mut entry = json!({ "prior": prior, "optimal_map": rows(opt.as_matrix()) });
                if phi.dim() == 2 {
                    let points = quality::two_state_grid(grid);
                    let a = quality::recovery_curve(&opt, &phi, &points)?;
                    let b = quality::recovery_curve(&are.map, &phi, &points)?;
                    let gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                    entry["max_curve_gap"] = json!(gap);
                }
                value[key] = entry;
            }
            emit_json(out(&common), &value)
        }
        Command::InvolutionScan { common, pi, sigma, tol } => {
            let (pi, sigma) = margins(&common, &pi, &sigma)?;
            let p = polytope::enumerate_vertices(&sigma, &pi)?;
            let (scan, ordered) = involution::psd_scan_polytope(&p, tol);
            emit_json(
                out(&common),
                &json!({
                    "convention": CONVENTION,
                    "pi": pi,
                    "image_prior": sigma,
                    "tol_psd": tol,
                    "vertices": ordered.vertices().iter().map(rows).collect::<Vec<_>>(),
                    "x_off_diagonal": scan.x_off_diagonal(),
                    "y_off_diagonal": scan.y_off_diagonal(),
                    "joint_off_diagonal": scan.joint_off_diagonal(),
                    "observation_compliant": scan.observation_compliant(),
                    "scan": scan,
                }),
            )
        }
        Command::Quantum { command } => run_quantum(command),
    }
}

/// Trace-free perturbation with `|delta|_1 = size`, the difference of two
/// seeded random distributions rescaled.
fn local_perturbation(n: usize, seed: u64, size: f64) -> Vec<f64> {
    let mut rng = random::rng(seed ^ 0xde17a);
    let a = random::probability_vector(&mut rng, n);
    let b = random::probability_vector(&mut rng, n);
    let diff: Vec<f64> = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x - y).collect();
    let norm: f64 = diff.iter().map(|x| x.abs()).sum();
    diff.iter().map(|x| x * size / norm).collect()
}

fn is_maximally_mixed(pi: &DensityMatrix) -> bool {
    let d = pi.dim();
    state_retrieval::linalg::max_abs_diff_c(pi.matrix(), DensityMatrix::maximally_mixed(d).matrix()) <= tol::NORM
}

fn run_quantum(command: QuantumCommand) -> Result<(), CliError> {
    match command {
        QuantumCommand::Petz { common, tol } => {
            let (kind, phi, pi) = load(&common)?.quantum()?;
            let petz = petz_map(&phi, &pi)?;
            emit_json(
                out(&common),
                &json!({
                    "channel": kind,
                    "prior": output::complex(pi.matrix()),
                    "petz": output::superoperator(&petz),
                    "axioms": check_quantum_axioms(&petz, &phi, &pi, tol)?,
                    "composite_determinant": petz.compose(&phi).determinant().re,
                }),
            )
        }
        QuantumCommand::CaseStudy { common, tol } => {
            let inst = load(&common)?;
            let (kind, phi, pi) = inst.quantum()?;
            let theorem = theorem_conditions(&phi, &pi, tol)?;
            let petz = petz_map(&phi, &pi)?;
            let candidate: Option<(&str, Superoperator)> = if theorem.holds {
                Some(("identity", Superoperator::identity(phi.dim())))
            } else if kind == "thermal-swap" {
                Some(("swap", channels::swap(2)))
            } else if phi.dim() == 2 && is_maximally_mixed(&pi) {
                Some(("qubit-search", qubit_optimal_retrieval(&phi, seed(&common, &inst)?)?.map))
            } else {
                None
            };
            let mut value = json!({
                "channel": kind,
                "theorem": theorem,
                "petz": output::superoperator(&petz),
                "petz_equals_channel": petz.distance(&phi) <= tol,
                "petz_channel_distance": petz.distance(&phi),
                "petz_axioms": check_quantum_axioms(&petz, &phi, &pi, tol)?,
                "petz_composite_determinant": petz.compose(&phi).determinant().re,
                "identity_axioms": check_quantum_axioms(&Superoperator::identity(phi.dim()), &phi, &pi, tol)?,
            });
            if let Some((name, map)) = candidate {
                value["retrieval"] = json!({
                    "kind": name,
                    "map": output::superoperator(&map),
                    "axioms": check_quantum_axioms(&map, &phi, &pi, tol)?,
                    "composite_determinant": map.compose(&phi).determinant().re,
                });
            }
            emit_json(out(&common), &value)
        }
        QuantumCommand::Sweep { common, grid } => {
            let inst = load(&common)?;
            let case = match inst.case.as_deref() {
                Some("fig2") => FigureCase::Fig2 { eta: inst.number(inst.eta, "eta")?, grid },
                Some("fig3") => {
                    let (lambda1, lambda2) = inst.thermal_rates()?;
                    FigureCase::Fig3 { lambda1, lambda2, beta_epsilon: inst.beta_epsilon()?, grid }
                }
                Some("fig4") => FigureCase::Fig4 {
                    compression: inst.number(inst.compression, "compression")?,
                    translation: inst.number(inst.translation, "translation")?,
                    resolution: grid,
                },
                Some(other) => return Err(CliError::Usage(format!("unknown figure case `{other}`"))),
                None => return Err(CliError::Usage("instance is missing `case`".into())),
            };
            let seed = match case {
                FigureCase::Fig3 { .. } => common.seed.or(inst.seed).unwrap_or(0),
                _ => seed(&common, &inst)?,
            };
            let data = figure_sweep(&case, seed)?;
            let body = output::csv(
                &data.columns,
                data.rows.iter().map(|r| {
                    r.iter()
                        .map(|c| match c {
                            Cell::Text(s) => s.clone(),
                            Cell::Number(v) => output::number(*v),
                        })
                        .collect()
                }),
            );
            emit(out(&common), &body)?;
            for (k, v) in &data.summary {
                eprintln!("{k} = {}", output::number(*v));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
