use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;
use state_retrieval::quantum::{Superoperator, C64};

use crate::CliError;

pub const CONVENTION: &str = "left-stochastic, entry[i][j]=P(i|j)";

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Debug, Serialize)]
pub struct ComplexMatrix {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

pub fn complex(m: &DMatrix<C64>) -> ComplexMatrix {
    ComplexMatrix { re: rows(&m.map(|z| z.re)), im: rows(&m.map(|z| z.im)) }
}

/// Superoperator in column-stacking form plus its Choi matrix.
#[derive(Debug, Serialize)]
pub struct SuperoperatorJson {
    pub dim: usize,
    pub vectorization: &'static str,
    pub matrix: ComplexMatrix,
    pub choi: ComplexMatrix,
}

pub fn superoperator(s: &Superoperator) -> SuperoperatorJson {
    SuperoperatorJson {
        dim: s.dim(),
        vectorization: "column-stacking, vec(AXB) = (B^T kron A) vec(X)",
        matrix: complex(s.matrix()),
        choi: complex(&s.choi()),
    }
}

/// Decimal with 17 significant digits; scientific outside `[1e-5, 1e17)`.
pub fn number(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..17).contains(&exp) {
        return format!("{v:.16e}");
    }
    format!("{:.*}", (16 - exp).max(0) as usize, v)
}

pub fn csv(columns: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Writes to `path` via a sibling temporary file, or to stdout.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    let Some(path) = path else {
        print!("{contents}");
        return Ok(());
    };
    let io = |e: std::io::Error| CliError::Io(path.display().to_string(), e);
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Parse("output".into(), e.to_string()))?;
    text.push('\n');
    emit(path, &text)
}
