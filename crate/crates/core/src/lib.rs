//! Bayesian synthetic likelihood with robust mean and variance adjustments.
//!
//! The synthetic likelihood replaces an intractable likelihood with a
//! Gaussian density over summary statistics whose mean and covariance are
//! estimated from model simulations. When the model cannot match the
//! observed summaries, two robustifications keep the posterior usable and
//! flag the offending statistics: a mean shift with Laplace-distributed
//! free parameters, and a variance inflation with exponential ones. This
//! crate provides the estimators, the component-wise MCMC sampler
//! (slice-sampler sweep over the adjustments, pseudo-marginal random-walk
//! update for the model parameter), the simulation models used in the
//! accompanying experiments, and misspecification diagnostics.

pub mod adjust;
pub mod diagnostics;
pub mod error;
pub mod importance;
pub mod mcmc;
pub mod models;
pub mod moments;
pub mod priors;
pub mod quantile;
pub mod rng;
pub mod slice;
pub mod trace;
pub mod transform;

pub use adjust::{mean_adjust, variance_inflate, AdjustmentKind, AdjustmentVector};
pub use error::{Error, Result};
pub use moments::{estimate_moments, gaussian_logpdf, MomentEstimate, SummaryVector};
pub use priors::{gamma_log_prior, sample_gamma_prior, GammaPrior, ThetaPrior};
pub use transform::Transform;
