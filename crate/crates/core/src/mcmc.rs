//! Component-wise MCMC for robust synthetic likelihood: each iteration
//! slice-samples every adjustment component with the accepted simulations
//! held fixed, then updates θ by a pseudo-marginal random-walk
//! Metropolis-Hastings step with m fresh simulations at the proposal.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::adjust::{mean_adjust, variance_inflate, AdjustmentKind, AdjustmentVector};
use crate::error::{Error, Result};
use crate::moments::{estimate_moments, gaussian_logpdf, MomentEstimate, SummaryVector};
use crate::models::Model;
use crate::priors::{gamma_log_prior, GammaPrior, ThetaPrior};
use crate::rng::{rng_from, tag};
use crate::slice::{slice_sample, SliceOptions};
use crate::trace::{Trace, TraceMeta, TraceRow};

/// Which synthetic-likelihood variant a chain targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    /// Plain synthetic likelihood.
    Bsl,
    /// Mean-adjusted robust variant (Laplace prior on Γ).
    RbslMean,
    /// Variance-inflated robust variant (Exponential prior on Γ).
    RbslVariance,
}

impl MethodKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodKind::Bsl => "bsl",
            MethodKind::RbslMean => "rbsl-mean",
            MethodKind::RbslVariance => "rbsl-var",
        }
    }

    pub fn from_str(s: &str) -> Result<Self> {
        match s {
            "bsl" => Ok(MethodKind::Bsl),
            "rbsl-mean" => Ok(MethodKind::RbslMean),
            "rbsl-var" => Ok(MethodKind::RbslVariance),
            _ => Err(Error::Parse(format!(
                "unknown method {s:?} (expected bsl, rbsl-mean or rbsl-var)"
            ))),
        }
    }

    /// The adjustment kind the method carries, if any.
    pub fn adjustment_kind(&self) -> Option<AdjustmentKind> {
        match self {
            MethodKind::Bsl => None,
            MethodKind::RbslMean => Some(AdjustmentKind::MeanShift),
            MethodKind::RbslVariance => Some(AdjustmentKind::VarianceInflation),
        }
    }
}

impl std::fmt::Display for MethodKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Log synthetic likelihood of the observed summary under the method's
/// Gaussian approximation; −∞ when the relevant covariance cannot be
/// factorized (callers then reject).
pub fn synthetic_loglike(
    eta_obs: &SummaryVector,
    moments: &MomentEstimate,
    gamma: Option<&AdjustmentVector>,
    method: MethodKind,
) -> Result<f64> {
    match method {
        MethodKind::Bsl => match &moments.chol {
            Some(l) => gaussian_logpdf(eta_obs.as_vector(), &moments.mu, l),
            None => Ok(f64::NEG_INFINITY),
        },
        MethodKind::RbslMean => {
            let gamma = gamma.ok_or_else(|| {
                Error::InvalidOptions("mean-adjusted method needs an adjustment vector".into())
            })?;
            match &moments.chol {
                Some(l) => {
                    let shifted = mean_adjust(moments, gamma)?;
                    gaussian_logpdf(eta_obs.as_vector(), &shifted, l)
                }
                None => Ok(f64::NEG_INFINITY),
            }
        }
        MethodKind::RbslVariance => {
            let gamma = gamma.ok_or_else(|| {
                Error::InvalidOptions("variance-inflated method needs an adjustment vector".into())
            })?;
            let inflated = variance_inflate(moments, gamma)?;
            match &inflated.chol {
                Some(l) => gaussian_logpdf(eta_obs.as_vector(), &inflated.mu, l),
                None => Ok(f64::NEG_INFINITY),
            }
        }
    }
}

/// Current position of one chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub theta: Vec<f64>,
    /// Absent for plain synthetic likelihood.
    pub gamma: Option<AdjustmentVector>,
    /// Moments of the currently accepted simulation batch at `theta`.
    pub moments: MomentEstimate,
    pub log_like: f64,
    pub log_prior_theta: f64,
    pub log_prior_gamma: f64,
}

/// Gaussian random-walk proposal on the unconstrained scale, stored as
/// the Cholesky factor of its covariance.
#[derive(Debug, Clone)]
pub struct ProposalCov {
    chol: DMatrix<f64>,
}

impl ProposalCov {
    pub fn new(cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != cov.ncols() || cov.nrows() == 0 {
            return Err(Error::InvalidOptions(format!(
                "proposal covariance must be square and nonempty, got {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let chol = nalgebra::Cholesky::new(cov)
            .ok_or_else(|| {
                Error::InvalidOptions(
                    "proposal covariance is not symmetric positive definite".into(),
                )
            })?
            .unpack();
        Ok(Self { chol })
    }

    /// Isotropic covariance var·I.
    pub fn scalar(var: f64, dim: usize) -> Result<Self> {
        if !(var > 0.0) {
            return Err(Error::InvalidOptions(format!(
                "proposal variance must be positive, got {var}"
            )));
        }
        Self::new(DMatrix::identity(dim, dim) * var)
    }

    /// Diagonal covariance from per-component variances.
    pub fn diagonal(vars: &[f64]) -> Result<Self> {
        if let Some(&v) = vars.iter().find(|&&v| !(v > 0.0)) {
            return Err(Error::InvalidOptions(format!(
                "proposal variances must be positive, got {v}"
            )));
        }
        Self::new(DMatrix::from_diagonal(&DVector::from_row_slice(vars)))
    }

    pub fn dim(&self) -> usize {
        self.chol.nrows()
    }

    /// Covariance scaled by `factor` (used by pilot tuning).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            chol: &self.chol * factor.sqrt(),
        }
    }

    /// One random-walk step L·z.
    fn sample_step(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.chol * z
    }

    /// Log proposal density q(to | from); used to verify the random walk
    /// is symmetric.
    pub fn log_density(&self, from: &[f64], to: &[f64]) -> f64 {
        let diff = DVector::from_row_slice(to) - DVector::from_row_slice(from);
        let d = self.dim();
        let z = self
            .chol
            .solve_lower_triangular(&diff)
            .expect("proposal factor is nonsingular by construction");
        let mut log_det_half = 0.0;
        for i in 0..d {
            log_det_half += self.chol[(i, i)].ln();
        }
        -0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln() - log_det_half
            - 0.5 * z.norm_squared()
    }
}

/// Thread-safe counters for simulation effort and failures.
#[derive(Debug, Default)]
pub struct SimulationLog {
    calls: AtomicU64,
    failures: AtomicU64,
}

impl SimulationLog {
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn failures(&self) -> u64 {
        self.failures.load(Ordering::Relaxed)
    }
}

/// Run the m simulations for one θ proposal and estimate their moments.
/// Simulation i draws its RNG stream from (seed, iteration, i), so the
/// result is identical however the batch is scheduled. Returns Ok(None)
/// when any simulation fails (the caller rejects the proposal).
pub fn simulate_moment_batch(
    model: &dyn Model,
    theta: &[f64],
    m: usize,
    seed: u64,
    iteration: u64,
    log: &SimulationLog,
) -> Result<Option<MomentEstimate>> {
    let sims: Vec<crate::error::Result<SummaryVector>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from(seed, &[tag::SIM, iteration, i as u64]);
            model.simulate_summary(theta, &mut rng)
        })
        .collect();
    log.calls.fetch_add(m as u64, Ordering::Relaxed);
    let failed = sims.iter().filter(|s| s.is_err()).count();
    if failed > 0 {
        log.failures.fetch_add(failed as u64, Ordering::Relaxed);
        return Ok(None);
    }
    let ok: Vec<SummaryVector> = sims.into_iter().map(|s| s.unwrap()).collect();
    Ok(Some(estimate_moments(&ok)?))
}

/// Shared pieces of one chain's θ update.
pub struct ThetaUpdateContext<'a> {
    pub model: &'a dyn Model,
    pub eta_obs: &'a SummaryVector,
    pub prior: &'a ThetaPrior,
    pub method: MethodKind,
    pub m: usize,
    pub proposal: &'a ProposalCov,
    /// Master seed for simulation streams.
    pub seed: u64,
    pub log: &'a SimulationLog,
}

/// Metropolis-Hastings accept decision from a log ratio.
pub fn mh_accept(log_ratio: f64, rng: &mut ChaCha8Rng) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    if log_ratio == f64::NEG_INFINITY {
        return false;
    }
    rng.random::<f64>().ln() < log_ratio
}

/// One pseudo-marginal random-walk update of θ on the unconstrained
/// scale. `x_unc` is the current unconstrained position and is kept in
/// sync with `state.theta` (it is the accepted proposal's coordinates,
/// never recomputed, so boundary rounding cannot break the chain).
/// On acceptance the fresh moments replace the cached ones; on rejection
/// every cached quantity is retained.
pub fn rwmh_theta_update(
    state: &mut ChainState,
    x_unc: &mut Vec<f64>,
    ctx: &ThetaUpdateContext,
    iteration: u64,
    rng: &mut ChaCha8Rng,
) -> Result<bool> {
    let step = ctx.proposal.sample_step(rng);
    let x_prop: Vec<f64> = x_unc.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
    let theta_prop = ctx.prior.from_unconstrained(&x_prop);

    let moments_prop =
        match simulate_moment_batch(ctx.model, &theta_prop, ctx.m, ctx.seed, iteration, ctx.log)? {
            Some(m) => m,
            // simulation failure rejects the proposal outright
            None => return Ok(false),
        };
    let log_like_prop =
        synthetic_loglike(ctx.eta_obs, &moments_prop, state.gamma.as_ref(), ctx.method)?;
    let log_prior_prop = ctx.prior.log_density(&theta_prop);
    let log_jac_prop = ctx.prior.log_jacobian(&x_prop);
    let log_jac_cur = ctx.prior.log_jacobian(x_unc);

    let log_numer = log_like_prop + log_prior_prop + log_jac_prop;
    let log_denom = state.log_like + state.log_prior_theta + log_jac_cur;
    let log_ratio = if log_numer == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if log_denom == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        log_numer - log_denom
    };

    if mh_accept(log_ratio, rng) {
        state.theta = theta_prop;
        *x_unc = x_prop;
        state.moments = moments_prop;
        state.log_like = log_like_prop;
        state.log_prior_theta = log_prior_prop;
        Ok(true)
    } else {
        Ok(false)
    }
}

/// Slice-sample adjustment component j from its full conditional, holding
/// the simulations fixed (no model call happens here). For variance
/// inflation the slice interval is clamped at 0 and never steps below.
pub fn slice_update_gamma(
    j: usize,
    state: &mut ChainState,
    eta_obs: &SummaryVector,
    gamma_prior: &GammaPrior,
    opts: &SliceOptions,
    method: MethodKind,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let gamma = state.gamma.clone().ok_or_else(|| {
        Error::InvalidOptions("slice update needs a method with an adjustment vector".into())
    })?;
    if j >= gamma.len() {
        return Err(Error::Dimension(format!(
            "adjustment component {j} out of range (d={})",
            gamma.len()
        )));
    }
    let mut local_opts = *opts;
    local_opts.lower_bound = match gamma.kind() {
        AdjustmentKind::VarianceInflation => Some(0.0),
        AdjustmentKind::MeanShift => None,
    };

    let moments = &state.moments;
    let log_target = |g: f64| -> f64 {
        let cand = match gamma.with_component(j, g) {
            Ok(c) => c,
            Err(_) => return f64::NEG_INFINITY,
        };
        let ll = synthetic_loglike(eta_obs, moments, Some(&cand), method)
            .unwrap_or(f64::NEG_INFINITY);
        ll + gamma_prior.component_log_density(g)
    };

    let current = gamma.as_slice()[j];
    let new_value = slice_sample(current, log_target, &local_opts, rng)?;
    let updated = gamma.with_component(j, new_value)?;
    state.log_like = synthetic_loglike(eta_obs, &state.moments, Some(&updated), method)?;
    state.log_prior_gamma = gamma_log_prior(&updated, gamma_prior)?;
    state.gamma = Some(updated);
    Ok(())
}

/// Full slice sweep over all adjustment components, j = 1..d_η in order.
pub fn gamma_sweep(
    state: &mut ChainState,
    eta_obs: &SummaryVector,
    gamma_prior: &GammaPrior,
    opts: &SliceOptions,
    method: MethodKind,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let d = gamma_prior.dim();
    for j in 0..d {
        slice_update_gamma(j, state, eta_obs, gamma_prior, opts, method, rng)?;
    }
    Ok(())
}

/// Everything a single chain run needs besides the model and data.
#[derive(Debug, Clone)]
pub struct ChainOptions {
    pub method: MethodKind,
    /// Simulations per θ proposal.
    pub m: usize,
    /// MCMC iterations T (the trace gains one extra initial row).
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    pub proposal: ProposalCov,
    pub slice: SliceOptions,
}

fn validate(
    model: &dyn Model,
    eta_obs: &SummaryVector,
    theta_prior: &ThetaPrior,
    gamma_prior: Option<&GammaPrior>,
    init_theta: &[f64],
    opts: &ChainOptions,
) -> Result<()> {
    if opts.m < 2 {
        return Err(Error::InvalidOptions(format!(
            "need at least 2 simulations per proposal, got {}",
            opts.m
        )));
    }
    if opts.burn_in > opts.iterations {
        return Err(Error::InvalidOptions(format!(
            "burn-in {} exceeds iteration count {}",
            opts.burn_in, opts.iterations
        )));
    }
    if opts.thin == 0 {
        return Err(Error::InvalidOptions("thinning stride must be ≥ 1".into()));
    }
    if eta_obs.len() != model.d_eta() {
        return Err(Error::Dimension(format!(
            "observed summary length {} does not match the model's {}",
            eta_obs.len(),
            model.d_eta()
        )));
    }
    if init_theta.len() != model.d_theta() || theta_prior.dim() != model.d_theta() {
        return Err(Error::Dimension(format!(
            "parameter dimensions disagree: init {}, prior {}, model {}",
            init_theta.len(),
            theta_prior.dim(),
            model.d_theta()
        )));
    }
    if opts.proposal.dim() != model.d_theta() {
        return Err(Error::Dimension(format!(
            "proposal covariance dimension {} does not match parameter dimension {}",
            opts.proposal.dim(),
            model.d_theta()
        )));
    }
    match (opts.method.adjustment_kind(), gamma_prior) {
        (None, None) => {}
        (None, Some(_)) => {
            return Err(Error::InvalidOptions(
                "plain synthetic likelihood takes no adjustment prior".into(),
            ))
        }
        (Some(_), None) => {
            return Err(Error::InvalidOptions(format!(
                "method {} needs an adjustment prior",
                opts.method
            )))
        }
        (Some(kind), Some(gp)) => {
            if gp.adjustment_kind() != kind {
                return Err(Error::InvalidOptions(format!(
                    "method {} needs a {:?} prior, got {:?}",
                    opts.method,
                    kind,
                    gp.adjustment_kind()
                )));
            }
            if gp.dim() != model.d_eta() {
                return Err(Error::Dimension(format!(
                    "adjustment prior dimension {} does not match summary dimension {}",
                    gp.dim(),
                    model.d_eta()
                )));
            }
        }
    }
    if !theta_prior.log_density(init_theta).is_finite() {
        return Err(Error::InvalidOptions(format!(
            "initial parameter {init_theta:?} lies outside the prior support"
        )));
    }
    Ok(())
}

/// Run one chain: per iteration a slice sweep over Γ (robust methods
/// only, simulations held fixed), then the pseudo-marginal θ update.
/// Iteration i is recorded when i is a multiple of the thinning stride;
/// the initial state is always row 0.
pub fn run_chain(
    model: &dyn Model,
    eta_obs: &SummaryVector,
    theta_prior: &ThetaPrior,
    gamma_prior: Option<&GammaPrior>,
    init_theta: &[f64],
    opts: &ChainOptions,
) -> Result<Trace> {
    validate(model, eta_obs, theta_prior, gamma_prior, init_theta, opts)?;
    let log = SimulationLog::default();
    let mut rng = rng_from(opts.seed, &[tag::CHAIN]);

    let moments = simulate_moment_batch(model, init_theta, opts.m, opts.seed, 0, &log)?
        .ok_or_else(|| {
            Error::Simulation("model simulation failed at the initial parameter".into())
        })?;
    let gamma = opts
        .method
        .adjustment_kind()
        .map(|kind| AdjustmentVector::zeros(model.d_eta(), kind));
    let log_like = synthetic_loglike(eta_obs, &moments, gamma.as_ref(), opts.method)?;
    let log_prior_gamma = match (&gamma, gamma_prior) {
        (Some(g), Some(gp)) => gamma_log_prior(g, gp)?,
        _ => 0.0,
    };
    let mut state = ChainState {
        theta: init_theta.to_vec(),
        gamma,
        moments,
        log_like,
        log_prior_theta: theta_prior.log_density(init_theta),
        log_prior_gamma,
    };
    let mut x_unc = theta_prior.to_unconstrained(init_theta)?;

    let d_gamma = if opts.method == MethodKind::Bsl {
        0
    } else {
        model.d_eta()
    };
    let meta = TraceMeta {
        method: opts.method,
        m: opts.m,
        seed: opts.seed,
        iterations: opts.iterations,
        burn_in: opts.burn_in,
        thin: opts.thin,
        d_theta: model.d_theta(),
        d_gamma,
    };
    let record = |state: &ChainState, iter: u64, accepted: bool| TraceRow {
        iter,
        accepted,
        log_like: state.log_like,
        theta: state.theta.clone(),
        gamma: state
            .gamma
            .as_ref()
            .map(|g| g.as_slice().to_vec())
            .unwrap_or_default(),
        burnin: iter <= opts.burn_in,
    };
    let mut rows = vec![record(&state, 0, false)];
    let mut acceptance_count = 0u64;

    let ctx = ThetaUpdateContext {
        model,
        eta_obs,
        prior: theta_prior,
        method: opts.method,
        m: opts.m,
        proposal: &opts.proposal,
        seed: opts.seed,
        log: &log,
    };
    for i in 1..=opts.iterations {
        if let Some(gp) = gamma_prior {
            gamma_sweep(&mut state, eta_obs, gp, &opts.slice, opts.method, &mut rng)?;
        }
        let accepted = rwmh_theta_update(&mut state, &mut x_unc, &ctx, i, &mut rng)?;
        if accepted {
            acceptance_count += 1;
        }
        if i % opts.thin == 0 {
            rows.push(record(&state, i, accepted));
        }
    }

    Ok(Trace {
        meta,
        rows,
        acceptance_count,
        sim_calls: log.calls(),
        sim_failures: log.failures(),
    })
}

/// Halve or double the proposal covariance toward a 15–40% acceptance
/// band using short pilot chains. The returned covariance is then fixed;
/// nothing adapts during a recorded run.
pub fn tune_proposal(
    model: &dyn Model,
    eta_obs: &SummaryVector,
    theta_prior: &ThetaPrior,
    gamma_prior: Option<&GammaPrior>,
    init_theta: &[f64],
    opts: &ChainOptions,
    rounds: u32,
) -> Result<ProposalCov> {
    let mut proposal = opts.proposal.clone();
    for round in 0..rounds {
        let pilot_opts = ChainOptions {
            iterations: 2000,
            burn_in: 0,
            thin: 1,
            seed: crate::rng::derive_seed(opts.seed, &[tag::PILOT, round as u64]),
            proposal: proposal.clone(),
            ..opts.clone()
        };
        let trace = run_chain(model, eta_obs, theta_prior, gamma_prior, init_theta, &pilot_opts)?;
        let rate = trace.acceptance_rate();
        if rate > 0.40 {
            proposal = proposal.scaled(2.0);
        } else if rate < 0.15 {
            proposal = proposal.scaled(0.5);
        } else {
            break;
        }
    }
    Ok(proposal)
}
