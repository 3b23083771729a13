//! Empirical quantiles shared by summaries and diagnostics.

/// Linear interpolation between order statistics (the common "type 7"
/// rule): h = (n−1)p, q = x_⌊h⌋ + (h−⌊h⌋)·(x_⌊h⌋₊₁ − x_⌊h⌋).
/// p=0 gives the minimum, p=1 the maximum. Input must be sorted.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    assert!((0.0..=1.0).contains(&p), "quantile level {p} outside [0,1]");
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let i = h.floor() as usize;
    if i + 1 >= n {
        return sorted[n - 1];
    }
    sorted[i] + (h - i as f64) * (sorted[i + 1] - sorted[i])
}

/// Equal-tailed interval [q_{(1-level)/2}, q_{(1+level)/2}].
pub fn credible_interval(sorted: &[f64], level: f64) -> (f64, f64) {
    let tail = 0.5 * (1.0 - level);
    (
        quantile_type7(sorted, tail),
        quantile_type7(sorted, 1.0 - tail),
    )
}

/// Quantile of a weighted sample: smallest x whose cumulative normalized
/// weight reaches p. `pairs` must be sorted by value and weights sum to 1.
pub fn weighted_quantile(pairs: &[(f64, f64)], p: f64) -> f64 {
    assert!(!pairs.is_empty());
    let mut cum = 0.0;
    for &(x, w) in pairs {
        cum += w;
        if cum >= p {
            return x;
        }
    }
    pairs[pairs.len() - 1].0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_deciles() {
        let x = [20.0, 30.0, 50.0];
        assert_eq!(quantile_type7(&x, 0.0), 20.0);
        assert_eq!(quantile_type7(&x, 1.0), 50.0);
        assert_eq!(quantile_type7(&x, 0.5), 30.0);
        assert!((quantile_type7(&x, 0.1) - 22.0).abs() < 1e-12);
        assert!((quantile_type7(&x, 0.6) - 34.0).abs() < 1e-12);
        assert!((quantile_type7(&x, 0.9) - 46.0).abs() < 1e-12);
    }

    #[test]
    fn interval_and_weighted() {
        let x: Vec<f64> = (0..=100).map(f64::from).collect();
        let (lo, hi) = credible_interval(&x, 0.95);
        assert!((lo - 2.5).abs() < 1e-12);
        assert!((hi - 97.5).abs() < 1e-12);

        let pairs = [(1.0, 0.25), (2.0, 0.25), (3.0, 0.5)];
        assert_eq!(weighted_quantile(&pairs, 0.2), 1.0);
        assert_eq!(weighted_quantile(&pairs, 0.5), 2.0);
        assert_eq!(weighted_quantile(&pairs, 0.9), 3.0);
    }
}
