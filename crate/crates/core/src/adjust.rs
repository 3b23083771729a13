//! Robust adjustments of the synthetic likelihood: mean shift and
//! variance inflation.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::moments::{cholesky_with_jitter, MomentEstimate};

/// Which robustification a free adjustment vector applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjustmentKind {
    /// Shift the simulated mean by standard-deviation-scaled offsets.
    MeanShift,
    /// Inflate each marginal variance by the factor 1+γ_i².
    VarianceInflation,
}

/// The d_η free parameters of a robust method.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustmentVector {
    gamma: DVector<f64>,
    kind: AdjustmentKind,
}

impl AdjustmentVector {
    /// Variance-inflation components must be nonnegative; mean-shift
    /// components are unrestricted.
    pub fn new(gamma: Vec<f64>, kind: AdjustmentKind) -> Result<Self> {
        if kind == AdjustmentKind::VarianceInflation {
            if let Some(i) = gamma.iter().position(|&g| !(g >= 0.0)) {
                return Err(Error::Domain(format!(
                    "variance-inflation component {} is negative ({})",
                    i + 1,
                    gamma[i]
                )));
            }
        }
        if let Some(i) = gamma.iter().position(|g| !g.is_finite()) {
            return Err(Error::Domain(format!(
                "adjustment component {} is not finite",
                i + 1
            )));
        }
        Ok(Self {
            gamma: DVector::from_vec(gamma),
            kind,
        })
    }

    pub fn zeros(d: usize, kind: AdjustmentKind) -> Self {
        Self {
            gamma: DVector::zeros(d),
            kind,
        }
    }

    pub fn kind(&self) -> AdjustmentKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.len() == 0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.gamma.as_slice()
    }

    /// Replace component `j`, revalidating the kind constraint.
    pub fn with_component(&self, j: usize, value: f64) -> Result<Self> {
        let mut g = self.gamma.as_slice().to_vec();
        g[j] = value;
        Self::new(g, self.kind)
    }
}

/// Mean adjustment: mu + s ⊙ γ with s_i = sqrt(sigma_ii), so the offsets
/// are in the same units as the summaries.
pub fn mean_adjust(est: &MomentEstimate, gamma: &AdjustmentVector) -> Result<DVector<f64>> {
    if gamma.kind() != AdjustmentKind::MeanShift {
        return Err(Error::InvalidOptions(
            "mean_adjust requires a MeanShift adjustment vector".into(),
        ));
    }
    let d = est.dim();
    if gamma.len() != d {
        return Err(Error::Dimension(format!(
            "adjustment length {} does not match summary dimension {}",
            gamma.len(),
            d
        )));
    }
    let mut out = est.mu.clone();
    for i in 0..d {
        let var = est.sigma[(i, i)];
        if var < 0.0 {
            return Err(Error::Numerical(format!(
                "covariance diagonal {} is negative ({var})",
                i + 1
            )));
        }
        out[i] += var.sqrt() * gamma.as_slice()[i];
    }
    Ok(out)
}

/// Variance inflation: sigma_ii ← sigma_ii·(1+γ_i²), off-diagonals kept,
/// Cholesky recomputed for the inflated matrix.
pub fn variance_inflate(est: &MomentEstimate, gamma: &AdjustmentVector) -> Result<MomentEstimate> {
    if gamma.kind() != AdjustmentKind::VarianceInflation {
        return Err(Error::InvalidOptions(
            "variance_inflate requires a VarianceInflation adjustment vector".into(),
        ));
    }
    let d = est.dim();
    if gamma.len() != d {
        return Err(Error::Dimension(format!(
            "adjustment length {} does not match summary dimension {}",
            gamma.len(),
            d
        )));
    }
    let mut sigma = est.sigma.clone();
    for i in 0..d {
        let g = gamma.as_slice()[i];
        sigma[(i, i)] += est.sigma[(i, i)] * g * g;
    }
    let chol = cholesky_with_jitter(&sigma);
    Ok(MomentEstimate {
        mu: est.mu.clone(),
        sigma,
        chol,
        m: est.m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{estimate_moments, gaussian_logpdf, SummaryVector};
    use nalgebra::DMatrix;

    fn est(mu: Vec<f64>, sigma: Vec<Vec<f64>>) -> MomentEstimate {
        let d = mu.len();
        let sigma = DMatrix::from_fn(d, d, |i, j| sigma[i][j]);
        let chol = cholesky_with_jitter(&sigma);
        MomentEstimate {
            mu: DVector::from_vec(mu),
            sigma,
            chol,
            m: 10,
        }
    }

    #[test]
    fn negative_inflation_rejected_on_construction() {
        assert!(AdjustmentVector::new(vec![0.1, -0.2], AdjustmentKind::VarianceInflation).is_err());
        assert!(AdjustmentVector::new(vec![0.1, -0.2], AdjustmentKind::MeanShift).is_ok());
    }

    #[test]
    fn mean_adjust_cases() {
        let e = est(vec![0.0, 0.0], vec![vec![4.0, 0.0], vec![0.0, 9.0]]);
        let g = AdjustmentVector::new(vec![0.5, -1.0], AdjustmentKind::MeanShift).unwrap();
        let out = mean_adjust(&e, &g).unwrap();
        assert_eq!(out.as_slice(), &[1.0, -3.0]);

        let e1 = est(vec![1.0], vec![vec![1.0]]);
        let g1 = AdjustmentVector::new(vec![2.0], AdjustmentKind::MeanShift).unwrap();
        assert_eq!(mean_adjust(&e1, &g1).unwrap().as_slice(), &[3.0]);

        let z = AdjustmentVector::zeros(2, AdjustmentKind::MeanShift);
        assert_eq!(mean_adjust(&e, &z).unwrap(), e.mu);
    }

    #[test]
    fn variance_inflate_cases() {
        let e = est(vec![0.0, 0.0], vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let g = AdjustmentVector::new(vec![1.0, 1.0], AdjustmentKind::VarianceInflation).unwrap();
        let out = variance_inflate(&e, &g).unwrap();
        assert_eq!(out.sigma[(0, 0)], 2.0);
        assert_eq!(out.sigma[(1, 1)], 2.0);
        assert_eq!(out.sigma[(0, 1)], 0.0);

        let e2 = est(vec![0.0, 0.0], vec![vec![4.0, 1.0], vec![1.0, 9.0]]);
        let g2 = AdjustmentVector::new(vec![0.5, 0.0], AdjustmentKind::VarianceInflation).unwrap();
        let out2 = variance_inflate(&e2, &g2).unwrap();
        assert_eq!(out2.sigma[(0, 0)], 5.0);
        assert_eq!(out2.sigma[(0, 1)], 1.0);
        assert_eq!(out2.sigma[(1, 0)], 1.0);
        assert_eq!(out2.sigma[(1, 1)], 9.0);

        let z = AdjustmentVector::zeros(2, AdjustmentKind::VarianceInflation);
        assert_eq!(variance_inflate(&e2, &z).unwrap().sigma, e2.sigma);
    }

    #[test]
    fn inflation_never_shrinks_diagonal_or_touches_off_diagonal() {
        let mut rng = crate::rng::rng_from(21, &[7]);
        for _ in 0..50 {
            let sims: Vec<SummaryVector> = (0..6)
                .map(|_| {
                    SummaryVector::new(
                        (0..3)
                            .map(|_| rand::Rng::random_range(&mut rng, -2.0..2.0))
                            .collect(),
                    )
                    .unwrap()
                })
                .collect();
            let e = estimate_moments(&sims).unwrap();
            let g = AdjustmentVector::new(
                (0..3)
                    .map(|_| rand::Rng::random_range(&mut rng, 0.0..3.0))
                    .collect(),
                AdjustmentKind::VarianceInflation,
            )
            .unwrap();
            let out = variance_inflate(&e, &g).unwrap();
            for i in 0..3 {
                assert!(out.sigma[(i, i)] >= e.sigma[(i, i)]);
                for j in 0..3 {
                    if i != j {
                        assert_eq!(out.sigma[(i, j)], e.sigma[(i, j)]);
                    }
                }
            }
        }
    }

    #[test]
    fn far_tail_density_monotone_in_inflation() {
        // At a point ≥ 10 sd from the mean, inflating a variance moves tail
        // mass toward the point, so the log-density rises monotonically in
        // each γ_i (this holds while (1+γ_i²)·σ_ii stays below the squared
        // distance, which the grid here respects).
        let e = est(
            vec![0.0, 0.0],
            vec![vec![1.0, 0.3], vec![0.3, 2.0]],
        );
        let x = DVector::from_vec(vec![12.0, 15.0]);
        for i in 0..2 {
            let mut prev = f64::NEG_INFINITY;
            for step in 0..20 {
                let mut g = vec![0.0, 0.0];
                g[i] = step as f64 * 0.25;
                let gv = AdjustmentVector::new(g, AdjustmentKind::VarianceInflation).unwrap();
                let inflated = variance_inflate(&e, &gv).unwrap();
                let ll =
                    gaussian_logpdf(&x, &inflated.mu, inflated.chol.as_ref().unwrap()).unwrap();
                assert!(ll >= prev, "tail density decreased at step {step}");
                prev = ll;
            }
        }
    }
}
