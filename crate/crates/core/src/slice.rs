//! Univariate slice sampler with stepping out and shrinkage.
//!
//! One call makes one exact transition that leaves the target invariant.
//! The vertical level is handled in log space: level = ln(u) + log f(x0),
//! so no density is ever exponentiated.

use rand::Rng;

use crate::error::{Error, Result};

/// Tuning knobs for one slice update.
#[derive(Debug, Clone, Copy)]
pub struct SliceOptions {
    /// Stepping-out width w.
    pub width: f64,
    /// Maximum stepping-out expansions per side before a hard error.
    pub max_step_out: u32,
    /// Maximum shrinkage iterations before a hard error.
    pub max_shrink: u32,
    /// Hard lower support bound; the interval is clamped here and never
    /// steps out below it.
    pub lower_bound: Option<f64>,
}

impl Default for SliceOptions {
    fn default() -> Self {
        Self {
            width: 1.0,
            max_step_out: 1000,
            max_shrink: 1000,
            lower_bound: None,
        }
    }
}

/// Draw x1 from the slice through x0 under `log_target`.
pub fn slice_sample<R: Rng + ?Sized, F: FnMut(f64) -> f64>(
    x0: f64,
    mut log_target: F,
    opts: &SliceOptions,
    rng: &mut R,
) -> Result<f64> {
    let ly0 = log_target(x0);
    if !ly0.is_finite() {
        return Err(Error::Sampler(format!(
            "slice sampler started at x0={x0} where log-target is {ly0}"
        )));
    }
    // u in (0, 1]; ln(u)=0 is allowed, u=0 is not.
    let u: f64 = 1.0 - rng.random::<f64>();
    let log_level = u.ln() + ly0;

    // Random initial placement of a width-w interval around x0.
    let mut left = x0 - opts.width * rng.random::<f64>();
    let mut right = left + opts.width;
    if let Some(lb) = opts.lower_bound {
        if left < lb {
            left = lb;
        }
    }

    // Step out until both ends leave the slice (or hit the bound).
    let mut steps = 0u32;
    while log_target(left) > log_level {
        if let Some(lb) = opts.lower_bound {
            if left <= lb {
                left = lb;
                break;
            }
        }
        left -= opts.width;
        if let Some(lb) = opts.lower_bound {
            if left < lb {
                left = lb;
            }
        }
        steps += 1;
        if steps > opts.max_step_out {
            return Err(Error::Sampler(format!(
                "stepping out exceeded {} expansions on the left from x0={x0} (level {log_level:.6e}); \
                 the target may have an unbounded flat region",
                opts.max_step_out
            )));
        }
    }
    steps = 0;
    while log_target(right) > log_level {
        right += opts.width;
        steps += 1;
        if steps > opts.max_step_out {
            return Err(Error::Sampler(format!(
                "stepping out exceeded {} expansions on the right from x0={x0} (level {log_level:.6e}); \
                 the target may have an unbounded flat region",
                opts.max_step_out
            )));
        }
    }

    // Shrink toward x0 until a candidate lands inside the slice.
    for _ in 0..opts.max_shrink {
        let x1 = left + (right - left) * rng.random::<f64>();
        if log_target(x1) >= log_level {
            return Ok(x1);
        }
        if x1 < x0 {
            left = x1;
        } else {
            right = x1;
        }
    }
    Err(Error::Sampler(format!(
        "shrinkage exceeded {} iterations at x0={x0}; the target may be \
         discontinuous or nearly degenerate",
        opts.max_shrink
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_chain(
        log_target: impl Fn(f64) -> f64 + Copy,
        x0: f64,
        n: usize,
        opts: &SliceOptions,
        seed: u64,
    ) -> Vec<f64> {
        let mut rng = crate::rng::rng_from(seed, &[5]);
        let mut x = x0;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            x = slice_sample(x, log_target, opts, &mut rng).unwrap();
            out.push(x);
        }
        out
    }

    #[test]
    fn standard_normal_moments() {
        let draws = run_chain(|x| -0.5 * x * x, 0.0, 100_000, &SliceOptions::default(), 51);
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "variance {var}");
    }

    #[test]
    fn lower_bounded_exponential_stays_nonnegative() {
        let opts = SliceOptions {
            lower_bound: Some(0.0),
            ..SliceOptions::default()
        };
        let draws = run_chain(
            |x| if x < 0.0 { f64::NEG_INFINITY } else { -x },
            0.5,
            100_000,
            &opts,
            52,
        );
        assert!(draws.iter().all(|&x| x >= 0.0));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 1.0).abs() < 0.03, "mean {mean}");
    }

    #[test]
    fn bad_starting_point_is_an_error() {
        let mut rng = crate::rng::rng_from(53, &[5]);
        let r = slice_sample(
            -1.0,
            |x| if x < 0.0 { f64::NEG_INFINITY } else { -x },
            &SliceOptions::default(),
            &mut rng,
        );
        assert!(matches!(r, Err(Error::Sampler(_))));
    }

    #[test]
    fn unbounded_flat_target_hits_step_out_cap() {
        let mut rng = crate::rng::rng_from(54, &[5]);
        let r = slice_sample(0.0, |_| 0.0, &SliceOptions::default(), &mut rng);
        assert!(matches!(r, Err(Error::Sampler(_))));
    }

    #[test]
    fn point_mass_target_hits_shrinkage_cap() {
        let mut rng = crate::rng::rng_from(55, &[5]);
        let r = slice_sample(
            0.0,
            |x| if x == 0.0 { 0.0 } else { f64::NEG_INFINITY },
            &SliceOptions::default(),
            &mut rng,
        );
        assert!(matches!(r, Err(Error::Sampler(_))));
    }
}
