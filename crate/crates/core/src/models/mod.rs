//! Simulation models and their summary-statistic maps, plus plain-text
//! data loaders for observed series and matrices.

use std::fs;
use std::path::Path;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::moments::SummaryVector;

pub mod ma1;
pub mod normal;
pub mod stable;
pub mod toad;

pub use ma1::Ma1Model;
pub use normal::NormalModel;
pub use toad::ToadModel;

/// Raw output of one model simulation, before summarization.
#[derive(Debug, Clone, PartialEq)]
pub enum RawData {
    /// A univariate series (observations or time points).
    Series(Vec<f64>),
    /// A rectangular row-major matrix; for the toad model rows are days
    /// and columns are individual toads.
    Matrix {
        rows: usize,
        cols: usize,
        values: Vec<f64>,
    },
}

impl RawData {
    pub fn matrix(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "matrix of {rows}x{cols} needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Ok(RawData::Matrix { rows, cols, values })
    }

    pub fn as_series(&self) -> Result<&[f64]> {
        match self {
            RawData::Series(v) => Ok(v),
            RawData::Matrix { .. } => Err(Error::Dimension(
                "expected a series, got a matrix".into(),
            )),
        }
    }
}

/// A simulator plus its summary map. Implementations are pure given the
/// RNG stream, so fixed seeds reproduce data sets exactly.
pub trait Model: Send + Sync {
    /// Parameter dimension d_θ.
    fn d_theta(&self) -> usize;
    /// Summary dimension d_η.
    fn d_eta(&self) -> usize;
    /// Short identifier used in reports.
    fn id(&self) -> &'static str;
    /// Generate one synthetic data set at theta.
    fn simulate(&self, theta: &[f64], rng: &mut dyn RngCore) -> Result<RawData>;
    /// Reduce a data set to the summary vector.
    fn summarize(&self, data: &RawData) -> Result<SummaryVector>;

    fn simulate_summary(&self, theta: &[f64], rng: &mut dyn RngCore) -> Result<SummaryVector> {
        self.summarize(&self.simulate(theta, rng)?)
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Load a one-value-per-line series. Blank lines and `#` comments are
/// skipped; anything else must parse as a number.
pub fn load_series(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            Error::Parse(format!(
                "{}:{}: expected one number per line, got {line:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::Parse(format!(
            "{}: no data lines found",
            path.display()
        )));
    }
    Ok(out)
}

/// Load a delimited-text matrix (rows = days, columns = toads). Fields are
/// comma-separated when a comma is present, whitespace-separated otherwise.
/// Empty fields (missing entries) and ragged rows are rejected.
pub fn load_matrix(path: &Path) -> Result<RawData> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = split_fields(line);
        match cols {
            None => cols = Some(fields.len()),
            Some(c) if c != fields.len() => {
                return Err(Error::Parse(format!(
                    "{}:{}: ragged row: {} fields, expected {c}",
                    path.display(),
                    lineno + 1,
                    fields.len()
                )));
            }
            _ => {}
        }
        for (col, f) in fields.iter().enumerate() {
            if f.is_empty() {
                return Err(Error::Parse(format!(
                    "{}:{}: missing entry in column {}",
                    path.display(),
                    lineno + 1,
                    col + 1
                )));
            }
            let v: f64 = f.parse().map_err(|_| {
                Error::Parse(format!(
                    "{}:{}: column {}: not a number: {f:?}",
                    path.display(),
                    lineno + 1,
                    col + 1
                ))
            })?;
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| {
        Error::Parse(format!("{}: no data lines found", path.display()))
    })?;
    if rows == 0 || cols == 0 {
        return Err(Error::Parse(format!("{}: empty matrix", path.display())));
    }
    RawData::matrix(rows, cols, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn tmp(name: &str, contents: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("rbsl-loader-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join(name);
        let mut f = std::fs::File::create(&p).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        p
    }

    #[test]
    fn series_loader_roundtrip_and_errors() {
        let p = tmp("series.txt", "# header\n1.5\n\n-2\n3e-1\n");
        assert_eq!(load_series(&p).unwrap(), vec![1.5, -2.0, 0.3]);
        let bad = tmp("series_bad.txt", "1.5\nx\n");
        assert!(matches!(load_series(&bad), Err(Error::Parse(_))));
        let empty = tmp("series_empty.txt", "# nothing\n");
        assert!(load_series(&empty).is_err());
    }

    #[test]
    fn matrix_loader_shapes_and_rejections() {
        let p = tmp("m.csv", "1, 2, 3\n4, 5, 6\n");
        match load_matrix(&p).unwrap() {
            RawData::Matrix { rows, cols, values } => {
                assert_eq!((rows, cols), (2, 3));
                assert_eq!(values, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
            }
            _ => panic!("expected matrix"),
        }
        let ws = tmp("m_ws.txt", "1 2\n3 4\n");
        assert!(load_matrix(&ws).is_ok());
        let ragged = tmp("m_ragged.csv", "1, 2, 3\n4, 5\n");
        assert!(matches!(load_matrix(&ragged), Err(Error::Parse(_))));
        let missing = tmp("m_missing.csv", "1, , 3\n");
        assert!(matches!(load_matrix(&missing), Err(Error::Parse(_))));
    }
}
