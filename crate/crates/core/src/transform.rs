//! Bijections between constrained parameter supports and the real line.
//!
//! Random-walk proposals run on the unconstrained scale; the log-Jacobian
//! of the inverse map is added to the log prior so the chain still targets
//! the posterior in the original parameterization.

use crate::error::{Error, Result};

/// ln(1+e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Per-component reparameterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    /// Unbounded components.
    Identity,
    /// Positive components: theta = e^x.
    Log,
    /// Interval (lo, hi): theta = lo + (hi−lo)·sigmoid(x).
    LogitAffine { lo: f64, hi: f64 },
}

impl Transform {
    /// Map a support-interior value to the real line.
    pub fn to_unconstrained(&self, theta: f64) -> Result<f64> {
        match *self {
            Transform::Identity => Ok(theta),
            Transform::Log => {
                if theta > 0.0 {
                    Ok(theta.ln())
                } else {
                    Err(Error::Domain(format!(
                        "log transform needs a strictly positive value, got {theta}"
                    )))
                }
            }
            Transform::LogitAffine { lo, hi } => {
                if theta > lo && theta < hi {
                    Ok(((theta - lo) / (hi - theta)).ln())
                } else {
                    Err(Error::Domain(format!(
                        "value {theta} is not strictly inside ({lo}, {hi})"
                    )))
                }
            }
        }
    }

    /// Inverse map from the real line back to the support.
    pub fn from_unconstrained(&self, x: f64) -> f64 {
        match *self {
            Transform::Identity => x,
            Transform::Log => x.exp(),
            Transform::LogitAffine { lo, hi } => {
                // sigmoid written to avoid overflow on both tails
                let s = if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                };
                lo + (hi - lo) * s
            }
        }
    }

    /// ln |dθ/dx| at x.
    pub fn log_jacobian(&self, x: f64) -> f64 {
        match *self {
            Transform::Identity => 0.0,
            Transform::Log => x,
            Transform::LogitAffine { lo, hi } => {
                // ln[(hi−lo)·s·(1−s)] with s = sigmoid(x)
                (hi - lo).ln() - softplus(x) - softplus(-x)
            }
        }
    }
}
