//! Tabular data behind the qubit and two-qubit retrieval comparisons.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::axioms::{petz_map, theorem_conditions};
use super::channels;
use super::qubit::{bloch_volume_ratio, qubit_optimal_retrieval};
use super::state::{bloch_operator, bloch_vector, trace_distance};
use super::{DensityMatrix, Superoperator, C64};
use crate::error::{Error, Result};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "case", rename_all = "lowercase")]
pub enum FigureCase {
    /// Qubit depolarizing channel, equatorial states on a `grid x grid` square.
    Fig2 { eta: f64, grid: usize },
    /// Thermal swap, `rho(x, y) kron gamma` on a `grid x grid` square.
    Fig3 { lambda1: f64, lambda2: f64, beta_epsilon: f64, grid: usize },
    /// Translation-compression channel applied to a sphere of
    /// `resolution x 2 resolution` points.
    Fig4 { compression: f64, translation: f64, resolution: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Text(String),
    Number(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Scalar side results (determinants, volume ratios).
    pub summary: Vec<(String, f64)>,
}

impl Dataset {
    pub fn number(&self, row: usize, column: &str) -> Option<f64> {
        let c = self.columns.iter().position(|h| h == column)?;
        match self.rows.get(row)?.get(c)? {
            Cell::Number(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }

    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

fn linspace(grid: usize) -> Vec<f64> {
    if grid == 1 {
        return vec![0.0];
    }
    (0..grid).map(|k| -1.0 + 2.0 * k as f64 / (grid - 1) as f64).collect()
}

fn disk_points(grid: usize) -> Vec<(f64, f64)> {
    let axis = linspace(grid);
    let mut out = Vec::new();
    for &y in &axis {
        for &x in &axis {
            if x * x + y * y <= 1.0 + 1e-12 {
                out.push((x, y));
            }
        }
    }
    out
}

/// Rows `(x, y, petz, optimal)` of forth-and-back trace distances.
fn distance_rows(
    points: &[(f64, f64)],
    state: impl Fn(f64, f64) -> DMatrix<C64> + Sync,
    phi: &Superoperator,
    petz: &Superoperator,
    optimal: &Superoperator,
) -> Vec<Vec<Cell>> {
    let petz_round = petz.compose(phi);
    let opt_round = optimal.compose(phi);
    points
        .par_iter()
        .map(|&(x, y)| {
            let rho = state(x, y);
            vec![
                Cell::Number(x),
                Cell::Number(y),
                Cell::Number(trace_distance(&rho, &petz_round.apply(&rho))),
                Cell::Number(trace_distance(&rho, &opt_round.apply(&rho))),
            ]
        })
        .collect()
}

fn distance_columns() -> Vec<String> {
    ["x", "y", "trace_distance_petz", "trace_distance_optimal"].map(String::from).to_vec()
}

pub fn figure_sweep(case: &FigureCase, seed: u64) -> Result<Dataset> {
    match *case {
        FigureCase::Fig2 { eta, grid } => {
            check_grid(grid)?;
            let phi = channels::depolarizing(eta, 2)?;
            let pi = DensityMatrix::maximally_mixed(2);
            let petz = petz_map(&phi, &pi)?;
            let optimal = if theorem_conditions(&phi, &pi, tol::CHECK)?.holds {
                Superoperator::identity(2)
            } else {
                qubit_optimal_retrieval(&phi, seed)?.map
            };
            let rows = distance_rows(&disk_points(grid), |x, y| bloch_operator([x, y, 0.0]), &phi, &petz, &optimal);
            Ok(Dataset {
                columns: distance_columns(),
                rows,
                summary: vec![
                    ("det_petz_composite".into(), petz.compose(&phi).determinant().re),
                    ("det_optimal_composite".into(), optimal.compose(&phi).determinant().re),
                ],
            })
        }
        FigureCase::Fig3 { lambda1, lambda2, beta_epsilon, grid } => {
            check_grid(grid)?;
            let phi = channels::thermal_swap(lambda1, lambda2, beta_epsilon)?;
            let pi = channels::thermal_swap_prior(beta_epsilon)?;
            let gamma = DensityMatrix::gibbs_qubit(beta_epsilon)?;
            let petz = petz_map(&phi, &pi)?;
            let optimal = channels::swap(2);
            let state = |x: f64, y: f64| bloch_operator([x, y, 0.0]).kronecker(gamma.matrix());
            let rows = distance_rows(&disk_points(grid), state, &phi, &petz, &optimal);
            Ok(Dataset {
                columns: distance_columns(),
                rows,
                summary: vec![
                    ("det_petz_composite".into(), petz.compose(&phi).determinant().re),
                    ("det_swap_composite".into(), optimal.compose(&phi).determinant().re),
                ],
            })
        }
        FigureCase::Fig4 { compression, translation, resolution } => {
            if resolution < 2 {
                return Err(Error::InvalidInput("sphere resolution must be at least 2".into()));
            }
            let cp_ok = translation.abs() <= 1.0 - compression + tol::CHECK
                && translation * translation <= (1.0 - compression) * (1.0 + 3.0 * compression) + tol::CHECK;
            if !(0.0..=1.0).contains(&compression) || !cp_ok {
                return Err(Error::InvalidChannel(format!(
                    "compression {compression} with translation {translation} is not completely positive"
                )));
            }
            let phi = channels::translation_compression(compression, translation);
            let pi = DensityMatrix::maximally_mixed(2);
            let petz = petz_map(&phi, &pi)?;
            let optimal = qubit_optimal_retrieval(&phi, seed)?.map;
            let maps: [(&str, Superoperator); 5] = [
                ("phi", phi.clone()),
                ("petz", petz.clone()),
                ("optimal", optimal.clone()),
                ("petz_composite", petz.compose(&phi)),
                ("optimal_composite", optimal.compose(&phi)),
            ];
            let sphere = sphere_points(resolution);
            let mut rows = Vec::with_capacity(maps.len() * sphere.len());
            for (name, map) in &maps {
                for r in &sphere {
                    let image = bloch_vector(&map.apply(&bloch_operator(*r)));
                    rows.push(vec![
                        Cell::Text((*name).to_string()),
                        Cell::Number(r[0]),
                        Cell::Number(r[1]),
                        Cell::Number(r[2]),
                        Cell::Number(image[0]),
                        Cell::Number(image[1]),
                        Cell::Number(image[2]),
                    ]);
                }
            }
            let summary = maps.iter().map(|(name, m)| (format!("volume_ratio_{name}"), bloch_volume_ratio(m))).collect();
            Ok(Dataset {
                columns: ["map", "x0", "y0", "z0", "x", "y", "z"].map(String::from).to_vec(),
                rows,
                summary,
            })
        }
    }
}

fn check_grid(grid: usize) -> Result<()> {
    if grid == 0 {
        return Err(Error::InvalidInput("grid must have at least one point".into()));
    }
    Ok(())
}

fn sphere_points(resolution: usize) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for i in 0..=resolution {
        let theta = std::f64::consts::PI * i as f64 / resolution as f64;
        let ring = if i == 0 || i == resolution { 1 } else { 2 * resolution };
        for j in 0..ring {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / ring as f64;
            out.push([theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]);
        }
    }
    out
}
