//! Toad nightly-displacement model and its 48 summary statistics.
//!
//! Each toad starts at refuge 0. Overnight it either moves by a symmetric
//! α-stable displacement (probability 1−p0) or returns to the refuge of a
//! uniformly chosen earlier day (probability p0). Displacements between
//! days k apart, pooled over all toads, are split at 10 m into "returns"
//! and "non-returns"; each lag contributes the return count, the log
//! differences of adjacent non-return deciles, and the non-return median.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, RngCore};

use super::{stable::sample_stable, Model, RawData};
use crate::error::{Error, Result};
use crate::moments::SummaryVector;
use crate::quantile::quantile_type7;
use crate::rng::{rng_from, tag};

/// Day lags at which displacements are summarized.
pub const TOAD_LAGS: [usize; 4] = [1, 2, 4, 8];

/// Displacements below this many metres count as returns.
pub const RETURN_RADIUS: f64 = 10.0;

/// Adjacent deciles closer than this are clamped before taking logs.
pub const MIN_DECILE_GAP: f64 = 1e-8;

/// Simulate refuge locations: a matrix with `n_days` rows and `n_toads`
/// columns. Toads get independent derived RNG streams, so the result does
/// not depend on scheduling or thread count.
pub fn simulate_toads(
    alpha: f64,
    delta: f64,
    p0: f64,
    n_toads: usize,
    n_days: usize,
    rng: &mut dyn RngCore,
) -> Result<RawData> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::Domain(format!(
            "stability parameter must lie in (1,2], got {alpha}"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::Domain(format!(
            "scale parameter must be positive, got {delta}"
        )));
    }
    if !(0.0..1.0).contains(&p0) {
        return Err(Error::Domain(format!(
            "return probability must lie in [0,1), got {p0}"
        )));
    }
    if n_toads == 0 || n_days == 0 {
        return Err(Error::InvalidOptions(
            "need at least one toad and one day".into(),
        ));
    }
    let base = rng.next_u64();
    let mut values = vec![0.0; n_days * n_toads];
    for j in 0..n_toads {
        let mut tr = rng_from(base, &[tag::UNIT, j as u64]);
        let mut pos = 0.0;
        for day in 1..n_days {
            if tr.random::<f64>() < p0 {
                let back = tr.random_range(0..day);
                pos = values[back * n_toads + j];
            } else {
                pos += sample_stable(alpha, delta, &mut tr)?;
            }
            values[day * n_toads + j] = pos;
        }
    }
    RawData::matrix(n_days, n_toads, values)
}

/// The 12 statistics for one lag's pooled absolute displacements:
/// [return count, 10 log decile differences of non-returns, non-return
/// median]. Also reports how many decile gaps were clamped.
pub fn displacement_block(abs_displacements: &[f64]) -> Result<([f64; 12], u64)> {
    let returns = abs_displacements
        .iter()
        .filter(|&&d| d < RETURN_RADIUS)
        .count();
    let mut non_returns: Vec<f64> = abs_displacements
        .iter()
        .copied()
        .filter(|&d| d >= RETURN_RADIUS)
        .collect();
    if non_returns.is_empty() {
        return Err(Error::Degenerate(
            "no non-return displacements at this lag; the decile summaries \
             are undefined (all moves were within the 10 m return radius)"
                .into(),
        ));
    }
    non_returns.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let deciles: Vec<f64> = (0..=10)
        .map(|k| quantile_type7(&non_returns, k as f64 / 10.0))
        .collect();
    let mut block = [0.0; 12];
    block[0] = returns as f64;
    let mut clamped = 0u64;
    for k in 0..10 {
        let mut gap = deciles[k + 1] - deciles[k];
        if gap < MIN_DECILE_GAP {
            gap = MIN_DECILE_GAP;
            clamped += 1;
        }
        block[k + 1] = gap.ln();
    }
    block[11] = quantile_type7(&non_returns, 0.5);
    Ok((block, clamped))
}

/// All 48 toad summaries, lag-major over [`TOAD_LAGS`]; second return
/// value counts clamped decile gaps.
pub fn toad_summaries(data: &RawData) -> Result<(Vec<f64>, u64)> {
    let (rows, cols, values) = match data {
        RawData::Matrix { rows, cols, values } => (*rows, *cols, values),
        RawData::Series(_) => {
            return Err(Error::Dimension(
                "toad summaries need a day-by-toad matrix".into(),
            ))
        }
    };
    let max_lag = *TOAD_LAGS.iter().max().unwrap();
    if rows < max_lag + 1 {
        return Err(Error::Dimension(format!(
            "need at least {} days for lag {max_lag}, got {rows}",
            max_lag + 1
        )));
    }
    let mut out = Vec::with_capacity(12 * TOAD_LAGS.len());
    let mut clamped = 0u64;
    for &lag in &TOAD_LAGS {
        let mut disp = Vec::with_capacity((rows - lag) * cols);
        for i in 0..rows - lag {
            for j in 0..cols {
                disp.push((values[(i + lag) * cols + j] - values[i * cols + j]).abs());
            }
        }
        let (block, c) = displacement_block(&disp)?;
        clamped += c;
        out.extend_from_slice(&block);
    }
    Ok((out, clamped))
}

/// Toad displacement model: θ = (α, δ, p0), 48 summaries.
#[derive(Debug)]
pub struct ToadModel {
    n_toads: usize,
    n_days: usize,
    clamp_warnings: AtomicU64,
}

impl ToadModel {
    pub fn new(n_toads: usize, n_days: usize) -> Result<Self> {
        let max_lag = *TOAD_LAGS.iter().max().unwrap();
        if n_days < max_lag + 1 {
            return Err(Error::InvalidOptions(format!(
                "toad model needs at least {} days, got {n_days}",
                max_lag + 1
            )));
        }
        if n_toads == 0 {
            return Err(Error::InvalidOptions("toad model needs at least one toad".into()));
        }
        Ok(Self {
            n_toads,
            n_days,
            clamp_warnings: AtomicU64::new(0),
        })
    }

    /// Total decile gaps clamped across all summarize calls so far.
    pub fn clamp_warnings(&self) -> u64 {
        self.clamp_warnings.load(Ordering::Relaxed)
    }

    pub fn n_toads(&self) -> usize {
        self.n_toads
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }
}

impl Model for ToadModel {
    fn d_theta(&self) -> usize {
        3
    }

    fn d_eta(&self) -> usize {
        48
    }

    fn id(&self) -> &'static str {
        "toad"
    }

    fn simulate(&self, theta: &[f64], rng: &mut dyn RngCore) -> Result<RawData> {
        if theta.len() != 3 {
            return Err(Error::Dimension(format!(
                "toad model takes (alpha, delta, p0), got length {}",
                theta.len()
            )));
        }
        simulate_toads(theta[0], theta[1], theta[2], self.n_toads, self.n_days, rng)
    }

    fn summarize(&self, data: &RawData) -> Result<SummaryVector> {
        let (stats, clamped) = toad_summaries(data)?;
        if clamped > 0 {
            self.clamp_warnings.fetch_add(clamped, Ordering::Relaxed);
        }
        SummaryVector::new(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_length_is_48() {
        let mut rng = crate::rng::rng_from(91, &[1]);
        let y = simulate_toads(1.8, 45.0, 0.6, 66, 63, &mut rng).unwrap();
        let (stats, _) = toad_summaries(&y).unwrap();
        assert_eq!(stats.len(), 48);
    }

    #[test]
    fn tiny_scale_high_return_probability_is_degenerate() {
        let mut rng = crate::rng::rng_from(91, &[2]);
        let y = simulate_toads(1.9, 1e-6, 0.9, 20, 63, &mut rng).unwrap();
        if let RawData::Matrix { rows, cols, values } = &y {
            for lag in TOAD_LAGS {
                for i in 0..rows - lag {
                    for j in 0..*cols {
                        let d = (values[(i + lag) * cols + j] - values[i * cols + j]).abs();
                        assert!(d < RETURN_RADIUS);
                    }
                }
            }
        }
        assert!(matches!(toad_summaries(&y), Err(Error::Degenerate(_))));
    }

    #[test]
    fn pure_gaussian_walk_has_additive_lag_variance() {
        // p0=0, α=2, δ=1: steps are N(0,2), so lag-k displacements have
        // variance 2k. Toads are independent walks; 2000 of them give a
        // pooled-variance standard error well under the 5% tolerance.
        let mut rng = crate::rng::rng_from(91, &[3]);
        let y = simulate_toads(2.0, 1.0, 0.0, 2000, 63, &mut rng).unwrap();
        if let RawData::Matrix { rows, cols, values } = &y {
            for lag in TOAD_LAGS {
                let mut sum2 = 0.0;
                let mut n = 0usize;
                for i in 0..rows - lag {
                    for j in 0..*cols {
                        let d = values[(i + lag) * cols + j] - values[i * cols + j];
                        sum2 += d * d;
                        n += 1;
                    }
                }
                let var = sum2 / n as f64;
                let want = 2.0 * lag as f64;
                assert!(
                    (var - want).abs() < 0.05 * want,
                    "lag {lag}: {var} vs {want}"
                );
            }
        }
    }

    #[test]
    fn fixed_seed_reproduces_locations() {
        let mut r1 = crate::rng::rng_from(91, &[4]);
        let mut r2 = crate::rng::rng_from(91, &[4]);
        let a = simulate_toads(1.7, 30.0, 0.5, 66, 63, &mut r1).unwrap();
        let b = simulate_toads(1.7, 30.0, 0.5, 66, 63, &mut r2).unwrap();
        assert_eq!(a, b);
        // consuming the stream means a second simulation differs
        let c = simulate_toads(1.7, 30.0, 0.5, 66, 63, &mut r1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn returns_increase_with_return_probability() {
        let mut means = Vec::new();
        for (idx, &p0) in [0.1, 0.5, 0.8].iter().enumerate() {
            let mut total = 0.0;
            for rep in 0..200u64 {
                let mut rng = crate::rng::rng_from(91, &[5, idx as u64, rep]);
                let y = simulate_toads(1.7, 35.0, p0, 66, 63, &mut rng).unwrap();
                let (stats, _) = toad_summaries(&y).unwrap();
                total += stats[0];
            }
            means.push(total / 200.0);
        }
        assert!(
            means[0] < means[1] && means[1] < means[2],
            "lag-1 return means not increasing: {means:?}"
        );
    }

    #[test]
    fn summaries_ignore_toad_ordering() {
        let mut rng = crate::rng::rng_from(91, &[6]);
        let y = simulate_toads(1.8, 45.0, 0.6, 30, 63, &mut rng).unwrap();
        if let RawData::Matrix { rows, cols, values } = &y {
            // rotate the columns by 7
            let mut permuted = vec![0.0; values.len()];
            for i in 0..*rows {
                for j in 0..*cols {
                    permuted[i * cols + (j + 7) % cols] = values[i * cols + j];
                }
            }
            let yp = RawData::matrix(*rows, *cols, permuted).unwrap();
            let (a, _) = toad_summaries(&y).unwrap();
            let (b, _) = toad_summaries(&yp).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn block_matches_three_point_quantile_oracle() {
        // independent interpolation for 3 sorted points a<b<c:
        // q(p) = a + 2p(b−a) for p ≤ 1/2, else b + (2p−1)(c−b)
        let (a, b, c) = (20.0, 30.0, 50.0);
        let oracle = |p: f64| {
            if p <= 0.5 {
                a + 2.0 * p * (b - a)
            } else {
                b + (2.0 * p - 1.0) * (c - b)
            }
        };
        let (block, clamped) = displacement_block(&[c, a, b]).unwrap();
        assert_eq!(clamped, 0);
        assert_eq!(block[0], 0.0);
        for k in 0..10 {
            let want = (oracle((k + 1) as f64 / 10.0) - oracle(k as f64 / 10.0)).ln();
            assert!(
                (block[k + 1] - want).abs() < 1e-12,
                "decile gap {k}: {} vs {want}",
                block[k + 1]
            );
        }
        assert_eq!(block[11], 30.0);

        // a sub-radius displacement moves into the return count only
        let (block2, _) = displacement_block(&[5.0, c, a, b]).unwrap();
        assert_eq!(block2[0], 1.0);
        assert_eq!(&block2[1..], &block[1..]);
    }

    #[test]
    fn tied_deciles_are_clamped_with_warning() {
        let (block, clamped) = displacement_block(&[20.0; 4]).unwrap();
        assert_eq!(clamped, 10);
        for k in 1..=10 {
            assert!((block[k] - MIN_DECILE_GAP.ln()).abs() < 1e-12);
        }
        assert_eq!(block[11], 20.0);

        let model = ToadModel::new(5, 63).unwrap();
        assert_eq!(model.clamp_warnings(), 0);
    }
}
