//! The assumed-normal location model and its contaminated true DGP.
//!
//! The assumed model draws n observations from N(θ, 1) and summarizes
//! them by the sample mean and sample variance. The true data-generating
//! process mixes in a wider normal component, and the generated sample is
//! affinely rescaled so its realized mean and standard deviation hit the
//! experiment's targets exactly.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::{Model, RawData};
use crate::error::{Error, Result};
use crate::moments::SummaryVector;

/// Sample mean and sample variance (divisor n−1).
pub fn summary_normal(data: &[f64]) -> Result<(f64, f64)> {
    let n = data.len();
    if n < 2 {
        return Err(Error::InvalidOptions(format!(
            "normal summaries need at least 2 observations, got {n}"
        )));
    }
    let mean = data.iter().sum::<f64>() / n as f64;
    let var = data.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    Ok((mean, var))
}

/// N(θ,1) location model with mean/variance summaries.
#[derive(Debug, Clone)]
pub struct NormalModel {
    n: usize,
}

impl NormalModel {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidOptions(format!(
                "normal model needs n ≥ 2 observations, got {n}"
            )));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

impl Model for NormalModel {
    fn d_theta(&self) -> usize {
        1
    }

    fn d_eta(&self) -> usize {
        2
    }

    fn id(&self) -> &'static str {
        "normal"
    }

    fn simulate(&self, theta: &[f64], rng: &mut dyn RngCore) -> Result<RawData> {
        if theta.len() != 1 {
            return Err(Error::Dimension(format!(
                "normal model takes a scalar parameter, got length {}",
                theta.len()
            )));
        }
        let data = (0..self.n)
            .map(|_| theta[0] + rng.sample::<f64, _>(StandardNormal))
            .collect();
        Ok(RawData::Series(data))
    }

    fn summarize(&self, data: &RawData) -> Result<SummaryVector> {
        let (mean, var) = summary_normal(data.as_series()?)?;
        SummaryVector::new(vec![mean, var])
    }
}

/// Draw n points from the contaminated mixture: with probability `omega`
/// from N(theta, 1), otherwise from N(theta, sigma_eps²).
pub fn generate_contaminated(
    theta: f64,
    n: usize,
    omega: f64,
    sigma_eps: f64,
    rng: &mut dyn RngCore,
) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidOptions(format!(
            "contaminated sample needs n ≥ 2, got {n}"
        )));
    }
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::Domain(format!(
            "mixture weight must lie in (0,1), got {omega}"
        )));
    }
    if !(sigma_eps > 0.0) {
        return Err(Error::Domain(format!(
            "contamination scale must be positive, got {sigma_eps}"
        )));
    }
    Ok((0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            if rng.random::<f64>() < omega {
                theta + z
            } else {
                theta + sigma_eps * z
            }
        })
        .collect())
}

/// Affinely rescale data so its sample mean and sample sd (divisor n−1)
/// equal the targets exactly.
pub fn standardize_to_moments(data: &[f64], target_mean: f64, target_sd: f64) -> Result<Vec<f64>> {
    if !(target_sd > 0.0) {
        return Err(Error::Domain(format!(
            "target sd must be positive, got {target_sd}"
        )));
    }
    let (mean, var) = summary_normal(data)?;
    let sd = var.sqrt();
    if !(sd > 0.0) {
        return Err(Error::Degenerate(
            "cannot rescale a constant sample to a positive sd".into(),
        ));
    }
    Ok(data
        .iter()
        .map(|x| target_mean + (x - mean) * target_sd / sd)
        .collect())
}

/// Contamination scale that gives the mixture a population sd of
/// `target_sd` when the clean component is N(θ,1) with weight `omega`:
/// ω·1 + (1−ω)·σ_ε² = target_sd².
pub fn contamination_scale_for_sd(omega: f64, target_sd: f64) -> Result<f64> {
    let var = target_sd * target_sd;
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::Domain(format!(
            "mixture weight must lie in (0,1), got {omega}"
        )));
    }
    let eps2 = (var - omega) / (1.0 - omega);
    if !(eps2 > 0.0) {
        return Err(Error::Domain(format!(
            "target sd {target_sd} is unreachable with mixture weight {omega}"
        )));
    }
    Ok(eps2.sqrt())
}
