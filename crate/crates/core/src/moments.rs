//! Summary vectors, simulated moments, and the Gaussian log-density.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A point in summary-statistic space.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryVector {
    values: DVector<f64>,
}

impl SummaryVector {
    /// Wrap a vector of summaries. Every entry must be finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "summary component {} is not finite ({})",
                i + 1,
                values[i]
            )));
        }
        Ok(Self {
            values: DVector::from_vec(values),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() == 0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.values
    }
}

/// Mean and covariance of simulated summaries at one parameter value,
/// with the covariance divided by the simulation count m (not m−1).
#[derive(Debug, Clone)]
pub struct MomentEstimate {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    /// Lower-triangular Cholesky factor of `sigma`, absent when the
    /// covariance is not numerically positive definite.
    pub chol: Option<DMatrix<f64>>,
    /// Number of simulations behind the estimate.
    pub m: usize,
}

impl MomentEstimate {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Cholesky with one jitter retry: on failure, add 1e-10·mean(diag) to the
/// diagonal and try again; on a second failure report no factor at all.
/// A larger jitter would quietly change the target the samplers leave
/// invariant, so callers treat an absent factor as log-likelihood −∞.
pub fn cholesky_with_jitter(sigma: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if let Some(f) = nalgebra::Cholesky::new(sigma.clone()) {
        return Some(f.unpack());
    }
    let d = sigma.nrows();
    if d == 0 {
        return None;
    }
    let jitter = 1e-10 * sigma.diagonal().mean();
    if !(jitter > 0.0) {
        return None;
    }
    let mut bumped = sigma.clone();
    for i in 0..d {
        bumped[(i, i)] += jitter;
    }
    nalgebra::Cholesky::new(bumped).map(|f| f.unpack())
}

/// Sample mean and covariance of `sims`, divisor m, symmetrized exactly.
pub fn estimate_moments(sims: &[SummaryVector]) -> Result<MomentEstimate> {
    let m = sims.len();
    if m < 2 {
        return Err(Error::Dimension(format!(
            "moment estimation needs at least 2 simulated summaries, got {m}"
        )));
    }
    let d = sims[0].len();
    if let Some(bad) = sims.iter().find(|s| s.len() != d) {
        return Err(Error::Dimension(format!(
            "summary length mismatch: expected {d}, got {}",
            bad.len()
        )));
    }

    let mut mu = DVector::zeros(d);
    for s in sims {
        mu += s.as_vector();
    }
    mu /= m as f64;

    let mut sigma = DMatrix::zeros(d, d);
    for s in sims {
        let diff = s.as_vector() - &mu;
        sigma.ger(1.0 / m as f64, &diff, &diff, 1.0);
    }
    // ger fills the full matrix, but enforce symmetry against rounding.
    for i in 0..d {
        for j in 0..i {
            let avg = 0.5 * (sigma[(i, j)] + sigma[(j, i)]);
            sigma[(i, j)] = avg;
            sigma[(j, i)] = avg;
        }
    }

    let chol = cholesky_with_jitter(&sigma);
    Ok(MomentEstimate { mu, sigma, chol, m })
}

/// Multivariate normal log-density via the Cholesky factor:
/// −(d/2)·ln(2π) − Σ ln L_ii − ½‖L⁻¹(x−μ)‖². Entirely in log space.
pub fn gaussian_logpdf(x: &DVector<f64>, mu: &DVector<f64>, chol: &DMatrix<f64>) -> Result<f64> {
    let d = x.len();
    if mu.len() != d || chol.nrows() != d || chol.ncols() != d {
        return Err(Error::Dimension(format!(
            "gaussian_logpdf dimensions disagree: x {}, mu {}, chol {}x{}",
            d,
            mu.len(),
            chol.nrows(),
            chol.ncols()
        )));
    }
    let diff = x - mu;
    let z = chol.solve_lower_triangular(&diff).ok_or_else(|| {
        Error::Numerical("triangular solve failed: zero diagonal in Cholesky factor".into())
    })?;
    let mut log_det_half = 0.0;
    for i in 0..d {
        log_det_half += chol[(i, i)].ln();
    }
    Ok(-0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln() - log_det_half - 0.5 * z.norm_squared())
}
