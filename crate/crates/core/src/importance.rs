//! Prior importance sampling for plain synthetic likelihood: draw
//! parameters from the prior, weight each by its estimated synthetic
//! likelihood, and self-normalize. Useful as a cheap whole-support scan
//! when a random-walk chain risks getting stuck between modes.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mcmc::MethodKind;
use crate::mcmc::{simulate_moment_batch, synthetic_loglike, SimulationLog};
use crate::models::Model;
use crate::moments::SummaryVector;
use crate::priors::ThetaPrior;
use crate::rng::{rng_from, tag};

/// Normalize log weights by exp-shift. Entries of −∞ get weight zero;
/// all entries −∞ is a degenerate sample. Returns the normalized weights
/// and the effective sample size (Σw)²/Σw².
pub fn normalize_log_weights(log_w: &[f64]) -> Result<(Vec<f64>, f64)> {
    if log_w.is_empty() {
        return Err(Error::InvalidOptions("no weights to normalize".into()));
    }
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Degenerate(
            "all importance weights are zero; the likelihood never evaluated finitely".into(),
        ));
    }
    let shifted: Vec<f64> = log_w.iter().map(|&lw| (lw - max).exp()).collect();
    let total: f64 = shifted.iter().sum();
    let sum_sq: f64 = shifted.iter().map(|w| w * w).sum();
    let ess = total * total / sum_sq;
    Ok((shifted.iter().map(|w| w / total).collect(), ess))
}

/// A self-normalized importance sample over θ.
#[derive(Debug, Clone)]
pub struct ImportanceSample {
    /// Draws from the prior, one Vec per draw.
    pub theta: Vec<Vec<f64>>,
    /// Unnormalized log weights (estimated synthetic log-likelihoods).
    pub log_weights: Vec<f64>,
    /// Self-normalized weights, summing to 1.
    pub weights: Vec<f64>,
    /// Effective sample size (Σw)²/Σw².
    pub ess: f64,
    pub sim_calls: u64,
    pub sim_failures: u64,
}

impl ImportanceSample {
    /// Weighted mean of one θ component.
    pub fn weighted_mean(&self, component: usize) -> f64 {
        self.theta
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| t[component] * w)
            .sum()
    }

    /// (value, weight) pairs of one component, ready for weighted
    /// quantiles or a weighted density estimate.
    pub fn component_weighted(&self, component: usize) -> Vec<(f64, f64)> {
        self.theta
            .iter()
            .zip(&self.weights)
            .map(|(t, w)| (t[component], *w))
            .collect()
    }
}

/// Importance-sample the plain synthetic-likelihood posterior with the
/// prior as proposal: N prior draws, m simulations per draw. Draws whose
/// simulations fail get weight zero. Deterministic in (seed, N, m).
pub fn importance_sample_bsl(
    prior: &ThetaPrior,
    n: usize,
    m: usize,
    model: &dyn Model,
    eta_obs: &SummaryVector,
    seed: u64,
) -> Result<ImportanceSample> {
    if n == 0 {
        return Err(Error::InvalidOptions(
            "importance sampling needs at least one draw".into(),
        ));
    }
    if m < 2 {
        return Err(Error::InvalidOptions(format!(
            "need at least 2 simulations per draw, got {m}"
        )));
    }
    if eta_obs.len() != model.d_eta() {
        return Err(Error::Dimension(format!(
            "observed summary length {} does not match the model's {}",
            eta_obs.len(),
            model.d_eta()
        )));
    }
    if prior.dim() != model.d_theta() {
        return Err(Error::Dimension(format!(
            "prior dimension {} does not match the model's {}",
            prior.dim(),
            model.d_theta()
        )));
    }

    // Proposal draws come from one sequential stream so their order is
    // fixed; only the weight evaluations run in parallel.
    let mut theta_rng = rng_from(seed, &[tag::IS_THETA]);
    let theta: Vec<Vec<f64>> = (0..n)
        .map(|_| prior.sample(&mut theta_rng))
        .collect::<Result<_>>()?;

    let log = SimulationLog::default();
    let log_weights: Vec<f64> = theta
        .par_iter()
        .enumerate()
        .map(|(k, t)| -> Result<f64> {
            let batch_seed = crate::rng::derive_seed(seed, &[tag::IS_SIM, k as u64]);
            let moments = simulate_moment_batch(model, t, m, batch_seed, 0, &log)?;
            match moments {
                Some(est) => synthetic_loglike(eta_obs, &est, None, MethodKind::Bsl),
                None => Ok(f64::NEG_INFINITY),
            }
        })
        .collect::<Result<_>>()?;

    let (weights, ess) = normalize_log_weights(&log_weights)?;
    Ok(ImportanceSample {
        theta,
        log_weights,
        weights,
        ess,
        sim_calls: log.calls(),
        sim_failures: log.failures(),
    })
}
