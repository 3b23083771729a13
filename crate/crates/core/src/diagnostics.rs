//! Misspecification diagnostics and chain post-processing: adjustment
//! posterior vs prior comparison, posterior predictive checks, repeated
//! sampling accuracy tables, chain summaries, and density estimates.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mcmc::MethodKind;
use crate::models::Model;
use crate::moments::SummaryVector;
use crate::priors::GammaPrior;
use crate::quantile::quantile_type7;
use crate::rng::{rng_from, tag};
use crate::trace::Trace;

/// Two-sample Kolmogorov-Smirnov statistic: the largest gap between the
/// two empirical CDFs, evaluated just after every distinct sample point.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidOptions(
            "KS statistic needs two nonempty samples".into(),
        ));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::Domain("KS samples must be finite".into()));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One-sample Kolmogorov-Smirnov statistic against a known CDF.
pub fn ks_one_sample(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::InvalidOptions("KS statistic needs a nonempty sample".into()));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("KS samples must be finite".into()));
    }
    let mut s = sample.to_vec();
    s.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (idx, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((idx as f64 + 1.0) / n - f).max(f - idx as f64 / n);
    }
    Ok(d)
}

/// Φ(x) via a rational erfc approximation, absolute error below 1.2e-7,
/// plenty for distribution comparisons.
pub fn standard_normal_cdf(x: f64) -> f64 {
    fn erfc(x: f64) -> f64 {
        let z = x.abs();
        let t = 1.0 / (1.0 + 0.5 * z);
        let ans = t
            * (-z * z - 1.26551223
                + t * (1.00002368
                    + t * (0.37409196
                        + t * (0.09678418
                            + t * (-0.18628806
                                + t * (0.27886807
                                    + t * (-1.13520398
                                        + t * (1.48851587
                                            + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
        if x >= 0.0 {
            ans
        } else {
            2.0 - ans
        }
    }
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Prior-vs-posterior comparison for one adjustment component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentDiagnostic {
    /// Component index, 0-based.
    pub component: usize,
    pub ks_statistic: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
    /// False when the posterior has drifted from the prior beyond the
    /// threshold, signalling a summary the model cannot match.
    pub compatible: bool,
}

impl ComponentDiagnostic {
    pub fn flag(&self) -> &'static str {
        if self.compatible {
            "compatible"
        } else {
            "incompatible"
        }
    }
}

/// Default posterior-vs-prior KS threshold above which a component is
/// flagged incompatible.
pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 0.3;

/// Default reference prior sample size for the divergence diagnostic.
pub const DEFAULT_REFERENCE_N: usize = 100_000;

/// Compare each adjustment component's posterior draws against fresh
/// prior draws. A posterior that stays close to the prior means the
/// model can match that summary; a large shift flags incompatibility.
pub fn gamma_prior_divergence(
    trace: &Trace,
    prior: &GammaPrior,
    reference_n: usize,
    threshold: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<ComponentDiagnostic>> {
    if trace.meta.d_gamma == 0 {
        return Err(Error::InvalidOptions(
            "divergence diagnostic needs a robust-method trace with adjustment draws".into(),
        ));
    }
    if prior.dim() != trace.meta.d_gamma {
        return Err(Error::Dimension(format!(
            "prior dimension {} does not match trace adjustment dimension {}",
            prior.dim(),
            trace.meta.d_gamma
        )));
    }
    if reference_n == 0 {
        return Err(Error::InvalidOptions("reference sample size must be ≥ 1".into()));
    }
    let n_post = trace.post_burnin_rows().count();
    if n_post < 100 {
        return Err(Error::InvalidOptions(format!(
            "divergence diagnostic needs ≥ 100 post-burn-in rows, got {n_post}"
        )));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidOptions(format!(
            "KS threshold must lie in [0,1], got {threshold}"
        )));
    }

    let mut out = Vec::with_capacity(trace.meta.d_gamma);
    for j in 0..trace.meta.d_gamma {
        let mut draws = trace.gamma_component(j);
        let reference: Vec<f64> = (0..reference_n)
            .map(|_| prior.sample_component(rng))
            .collect();
        let ks = ks_two_sample(&draws, &reference)?;
        draws.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out.push(ComponentDiagnostic {
            component: j,
            ks_statistic: ks,
            q025: quantile_type7(&draws, 0.025),
            q50: quantile_type7(&draws, 0.5),
            q975: quantile_type7(&draws, 0.975),
            compatible: ks <= threshold,
        });
    }
    Ok(out)
}

/// Whether a predictive check simulates the bare model or also applies
/// the posterior adjustment of each resampled row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictiveMode {
    /// Simulate the model as-is at the resampled θ.
    Raw,
    /// Additionally shift (mean method) or add noise (variance method)
    /// using the row's adjustment, scaled by the pooled predictive
    /// standard deviation of each statistic.
    Adjusted,
}

/// Predictive distribution of one summary statistic.
#[derive(Debug, Clone)]
pub struct PredictiveSummary {
    /// Statistic index, 0-based.
    pub statistic: usize,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
    pub observed: f64,
    /// Fraction of predictive draws ≤ the observed value.
    pub observed_percentile: f64,
}

/// Posterior predictive check: resample post-burn-in rows with
/// replacement, simulate the model once per draw, and compare each
/// statistic's predictive distribution to the observed value. Rows are
/// put in a canonical order first, so any permutation of the trace
/// yields identical output.
pub fn posterior_predictive(
    trace: &Trace,
    model: &dyn Model,
    eta_obs: &SummaryVector,
    n_draws: usize,
    mode: PredictiveMode,
    seed: u64,
) -> Result<Vec<PredictiveSummary>> {
    if n_draws < 100 {
        return Err(Error::InvalidOptions(format!(
            "predictive check needs ≥ 100 draws, got {n_draws}"
        )));
    }
    if eta_obs.len() != model.d_eta() {
        return Err(Error::Dimension(format!(
            "observed summary length {} does not match the model's {}",
            eta_obs.len(),
            model.d_eta()
        )));
    }
    let mut rows: Vec<(&Vec<f64>, &Vec<f64>)> = trace
        .post_burnin_rows()
        .map(|r| (&r.theta, &r.gamma))
        .collect();
    if rows.is_empty() {
        return Err(Error::Degenerate(
            "no post-burn-in rows to resample for the predictive check".into(),
        ));
    }
    if mode == PredictiveMode::Adjusted && trace.meta.d_gamma == 0 {
        return Err(Error::InvalidOptions(
            "adjusted predictive mode needs a robust-method trace".into(),
        ));
    }
    fn row_cmp(a: &(&Vec<f64>, &Vec<f64>), b: &(&Vec<f64>, &Vec<f64>)) -> std::cmp::Ordering {
        let ai = a.0.iter().chain(a.1.iter());
        let bi = b.0.iter().chain(b.1.iter());
        for (x, y) in ai.zip(bi) {
            match x.partial_cmp(y).unwrap() {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        std::cmp::Ordering::Equal
    }
    rows.sort_by(row_cmp);

    let mut pick_rng = rng_from(seed, &[tag::PREDICTIVE]);
    let picks: Vec<usize> = (0..n_draws)
        .map(|_| pick_rng.random_range(0..rows.len()))
        .collect();

    let sims: Vec<Result<(SummaryVector, Vec<f64>)>> = picks
        .par_iter()
        .enumerate()
        .map(|(k, &idx)| {
            let mut rng = rng_from(seed, &[tag::PREDICTIVE, k as u64]);
            let (theta, gamma) = rows[idx];
            let eta = model.simulate_summary(theta, &mut rng)?;
            Ok((eta, gamma.clone()))
        })
        .collect();
    let mut draws: Vec<(SummaryVector, Vec<f64>)> = Vec::with_capacity(n_draws);
    for s in sims {
        draws.push(s?);
    }

    let d = model.d_eta();
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(n_draws); d];
    for (eta, _) in &draws {
        for (i, &v) in eta.as_slice().iter().enumerate() {
            columns[i].push(v);
        }
    }

    if mode == PredictiveMode::Adjusted {
        // pooled scale: the raw predictive sd of each statistic stands in
        // for the simulated-moment sd of each retained row
        let scales: Vec<f64> = columns
            .iter()
            .map(|col| {
                let n = col.len() as f64;
                let mean = col.iter().sum::<f64>() / n;
                (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
            })
            .collect();
        let adjustment_kind = trace.meta.method.adjustment_kind().ok_or_else(|| {
            Error::InvalidOptions("adjusted predictive mode needs a robust method".into())
        })?;
        for (k, (_, gamma)) in draws.iter().enumerate() {
            let mut rng = rng_from(seed, &[tag::PREDICTIVE, k as u64, 1]);
            for i in 0..d {
                match adjustment_kind {
                    crate::adjust::AdjustmentKind::MeanShift => {
                        columns[i][k] += scales[i] * gamma[i];
                    }
                    crate::adjust::AdjustmentKind::VarianceInflation => {
                        let z: f64 = rng.sample(StandardNormal);
                        columns[i][k] += scales[i] * gamma[i] * z;
                    }
                }
            }
        }
    }

    let mut out = Vec::with_capacity(d);
    for (i, col) in columns.iter_mut().enumerate() {
        col.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let obs = eta_obs.as_slice()[i];
        let below = col.iter().filter(|&&v| v <= obs).count();
        out.push(PredictiveSummary {
            statistic: i,
            q025: quantile_type7(col, 0.025),
            q50: quantile_type7(col, 0.5),
            q975: quantile_type7(col, 0.975),
            observed: obs,
            observed_percentile: below as f64 / col.len() as f64,
        });
    }
    Ok(out)
}

/// One row of the repeated-sampling accuracy table: one method and one
/// parameter component, aggregated over replicate runs.
#[derive(Debug, Clone)]
pub struct AccuracyRow {
    pub method: MethodKind,
    /// Parameter component, 0-based.
    pub parameter: usize,
    pub bias: f64,
    pub rmse: f64,
    /// Mean width of the equal-tailed credible interval.
    pub mean_length: f64,
    /// Fraction of runs whose interval covers the true value.
    pub coverage: f64,
    pub n_runs: usize,
}

/// Repeated-sampling accuracy of posterior means, grouped by method.
#[derive(Debug, Clone)]
pub struct AccuracyTable {
    pub level: f64,
    pub rows: Vec<AccuracyRow>,
}

/// Aggregate replicate runs into bias, RMSE, interval length and
/// coverage per method and parameter, all relative to the stated true
/// value for each run.
pub fn accuracy_table(runs: &[(Trace, Vec<f64>)], level: f64) -> Result<AccuracyTable> {
    if runs.len() < 2 {
        return Err(Error::InvalidOptions(format!(
            "accuracy table needs at least 2 runs, got {}",
            runs.len()
        )));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::InvalidOptions(format!(
            "credible level must lie in (0,1), got {level}"
        )));
    }
    let lo_p = (1.0 - level) / 2.0;
    let hi_p = 1.0 - lo_p;

    let mut methods: Vec<MethodKind> = Vec::new();
    for (t, truth) in runs {
        if truth.len() != t.meta.d_theta {
            return Err(Error::Dimension(format!(
                "true parameter length {} does not match trace dimension {}",
                truth.len(),
                t.meta.d_theta
            )));
        }
        if t.post_burnin_rows().next().is_none() {
            return Err(Error::Degenerate(
                "a run has no post-burn-in rows to summarize".into(),
            ));
        }
        if !methods.contains(&t.meta.method) {
            methods.push(t.meta.method);
        }
    }

    let mut rows = Vec::new();
    for method in methods {
        let group: Vec<&(Trace, Vec<f64>)> =
            runs.iter().filter(|(t, _)| t.meta.method == method).collect();
        let d_theta = group[0].0.meta.d_theta;
        for k in 0..d_theta {
            let mut errs = Vec::with_capacity(group.len());
            let mut lengths = Vec::with_capacity(group.len());
            let mut covered = 0usize;
            for (t, truth) in &group {
                let mut draws = t.theta_component(k);
                let mean = draws.iter().sum::<f64>() / draws.len() as f64;
                errs.push(mean - truth[k]);
                draws.sort_by(|x, y| x.partial_cmp(y).unwrap());
                let lo = quantile_type7(&draws, lo_p);
                let hi = quantile_type7(&draws, hi_p);
                lengths.push(hi - lo);
                if truth[k] >= lo && truth[k] <= hi {
                    covered += 1;
                }
            }
            let n = errs.len() as f64;
            let bias = errs.iter().sum::<f64>() / n;
            let rmse = (errs.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
            rows.push(AccuracyRow {
                method,
                parameter: k,
                bias,
                rmse,
                mean_length: lengths.iter().sum::<f64>() / n,
                coverage: covered as f64 / n,
                n_runs: group.len(),
            });
        }
    }
    Ok(AccuracyTable { level, rows })
}

/// Location summary of one scalar chain component.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub mean: f64,
    pub median: f64,
    pub q025: f64,
    pub q975: f64,
}

fn summarize_component(draws: &mut Vec<f64>) -> ParamSummary {
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    draws.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ParamSummary {
        mean,
        median: quantile_type7(draws, 0.5),
        q025: quantile_type7(draws, 0.025),
        q975: quantile_type7(draws, 0.975),
    }
}

/// Whole-chain summary: acceptance rate plus per-component posterior
/// location estimates over the post-burn-in rows.
#[derive(Debug, Clone)]
pub struct ChainSummary {
    pub acceptance_rate: f64,
    pub n_post_burnin: usize,
    pub theta: Vec<ParamSummary>,
    pub gamma: Vec<ParamSummary>,
}

pub fn chain_summary(trace: &Trace) -> Result<ChainSummary> {
    if trace.rows.is_empty() {
        return Err(Error::InvalidOptions("cannot summarize an empty trace".into()));
    }
    let n_post = trace.post_burnin_rows().count();
    if n_post == 0 {
        return Err(Error::Degenerate(
            "no post-burn-in rows to summarize; lower the burn-in or run longer".into(),
        ));
    }
    let theta = (0..trace.meta.d_theta)
        .map(|k| summarize_component(&mut trace.theta_component(k)))
        .collect();
    let gamma = (0..trace.meta.d_gamma)
        .map(|k| summarize_component(&mut trace.gamma_component(k)))
        .collect();
    Ok(ChainSummary {
        acceptance_rate: trace.acceptance_rate(),
        n_post_burnin: n_post,
        theta,
        gamma,
    })
}

/// Gaussian kernel density estimate on a regular grid. Weights, when
/// given, must be nonnegative and not all zero; the bandwidth uses the
/// effective sample size in place of n. Returns (grid, density).
pub fn kde_grid(
    values: &[f64],
    weights: Option<&[f64]>,
    n_grid: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if values.len() < 2 {
        return Err(Error::InvalidOptions(
            "density estimate needs at least 2 points".into(),
        ));
    }
    if n_grid < 2 {
        return Err(Error::InvalidOptions("density grid needs at least 2 points".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("density input must be finite".into()));
    }
    let w: Vec<f64> = match weights {
        Some(w) => {
            if w.len() != values.len() {
                return Err(Error::Dimension(format!(
                    "weight length {} does not match value length {}",
                    w.len(),
                    values.len()
                )));
            }
            if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::Domain("weights must be nonnegative and finite".into()));
            }
            let total: f64 = w.iter().sum();
            if total <= 0.0 {
                return Err(Error::Degenerate("all density weights are zero".into()));
            }
            w.iter().map(|&x| x / total).collect()
        }
        None => vec![1.0 / values.len() as f64; values.len()],
    };

    let mean: f64 = values.iter().zip(&w).map(|(v, wi)| v * wi).sum();
    let var: f64 = values
        .iter()
        .zip(&w)
        .map(|(v, wi)| wi * (v - mean) * (v - mean))
        .sum();
    let sd = var.sqrt();
    let ess = 1.0 / w.iter().map(|wi| wi * wi).sum::<f64>();

    // weighted interquartile range for the robust spread term
    let mut pairs: Vec<(f64, f64)> = values.iter().cloned().zip(w.iter().cloned()).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let iqr = crate::quantile::weighted_quantile(&pairs, 0.75)
        - crate::quantile::weighted_quantile(&pairs, 0.25);

    let spread = if iqr > 0.0 {
        sd.min(iqr / 1.34)
    } else {
        sd
    };
    if spread <= 0.0 {
        return Err(Error::Degenerate(
            "density input has zero spread; no bandwidth exists".into(),
        ));
    }
    let h = 0.9 * spread * ess.powf(-0.2);

    let lo = pairs.first().unwrap().0 - 3.0 * h;
    let hi = pairs.last().unwrap().0 + 3.0 * h;
    let step = (hi - lo) / (n_grid - 1) as f64;
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * h);
    let grid: Vec<f64> = (0..n_grid).map(|g| lo + g as f64 * step).collect();
    let density: Vec<f64> = grid
        .iter()
        .map(|&x| {
            values
                .iter()
                .zip(&w)
                .map(|(&v, &wi)| {
                    let z = (x - v) / h;
                    wi * norm * (-0.5 * z * z).exp()
                })
                .sum()
        })
        .collect();
    Ok((grid, density))
}

/// Strict interior local maxima of a sampled curve, as (x, y) pairs.
pub fn local_maxima(xs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 1..ys.len().saturating_sub(1) {
        if ys[i] > ys[i - 1] && ys[i] > ys[i + 1] {
            out.push((xs[i], ys[i]));
        }
    }
    out
}
