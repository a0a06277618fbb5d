use std::path::Path;

use serde::Deserialize;
use state_retrieval::quantum::{channels, DensityMatrix, Superoperator};
use state_retrieval::stochastic::{ProbabilityVector, StochasticMatrix};
use state_retrieval::RetrievalProblem;

use crate::CliError;

/// Instance file. Matrices are row-major with `phi[i][j] = P(i | j)`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub phi: Option<Vec<Vec<f64>>>,
    pub pi: Option<Vec<f64>>,
    /// Candidate retrieval map for `check`.
    pub candidate: Option<Vec<Vec<f64>>>,
    pub seed: Option<u64>,
    pub sample_count: Option<usize>,
    /// Quantum channel family: depolarizing, thermalizing, thermal-swap,
    /// translation-compression.
    pub channel: Option<String>,
    /// Figure case for `quantum sweep`: fig2, fig3, fig4.
    pub case: Option<String>,
    pub d: Option<usize>,
    pub eta: Option<f64>,
    pub lambda: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub beta: Option<f64>,
    pub epsilon: Option<f64>,
    pub compression: Option<f64>,
    pub translation: Option<f64>,
}

fn missing(field: &str) -> CliError {
    CliError::Usage(format!("instance is missing `{field}`"))
}

impl Instance {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Parse(path.display().to_string(), e.to_string()))
    }

    pub fn phi(&self) -> Result<StochasticMatrix, CliError> {
        Ok(StochasticMatrix::from_rows(self.phi.as_ref().ok_or_else(|| missing("phi"))?)?)
    }

    pub fn prior(&self) -> Result<ProbabilityVector, CliError> {
        Ok(ProbabilityVector::new(self.pi.clone().ok_or_else(|| missing("pi"))?)?)
    }

    pub fn problem(&self) -> Result<RetrievalProblem, CliError> {
        Ok(RetrievalProblem::new(self.phi()?, self.prior()?)?)
    }

    pub fn number(&self, value: Option<f64>, field: &str) -> Result<f64, CliError> {
        value.ok_or_else(|| missing(field))
    }

    /// `beta * epsilon` of the Gibbs state.
    pub fn beta_epsilon(&self) -> Result<f64, CliError> {
        Ok(self.number(self.beta, "beta")? * self.number(self.epsilon, "epsilon")?)
    }

    pub fn thermal_rates(&self) -> Result<(f64, f64), CliError> {
        match (self.lambda1.or(self.lambda), self.lambda2.or(self.lambda)) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(missing("lambda1/lambda2")),
        }
    }

    /// The quantum channel and its prior. An explicit `pi` overrides the
    /// family's default prior with the corresponding diagonal state.
    pub fn quantum(&self) -> Result<(String, Superoperator, DensityMatrix), CliError> {
        let kind = self.channel.clone().ok_or_else(|| missing("channel"))?;
        let (phi, prior) = match kind.as_str() {
            "depolarizing" => {
                let d = self.d.unwrap_or(2);
                (channels::depolarizing(self.number(self.eta, "eta")?, d)?, DensityMatrix::maximally_mixed(d))
            }
            "thermalizing" => {
                let gamma = DensityMatrix::gibbs_qubit(self.beta_epsilon()?)?;
                (channels::thermalizing(self.number(self.lambda, "lambda")?, &gamma)?, gamma)
            }
            "thermal-swap" => {
                let (l1, l2) = self.thermal_rates()?;
                let be = self.beta_epsilon()?;
                (channels::thermal_swap(l1, l2, be)?, channels::thermal_swap_prior(be)?)
            }
            "translation-compression" => (
                channels::translation_compression(
                    self.number(self.compression, "compression")?,
                    self.number(self.translation, "translation")?,
                ),
                DensityMatrix::maximally_mixed(2),
            ),
            other => return Err(CliError::Usage(format!("unknown channel `{other}`"))),
        };
        let prior = match &self.pi {
            Some(p) => DensityMatrix::diagonal(p)?,
            None => prior,
        };
        Ok((kind, phi, prior))
    }
}
