//! Priors for the adjustment vector Γ and the model parameter θ.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::adjust::{AdjustmentKind, AdjustmentVector};
use crate::error::{Error, Result};
use crate::transform::Transform;

/// Shrinkage prior on the adjustment components, i.i.d. across the d_η
/// components. Laplace pairs with mean shifting (signed offsets),
/// Exponential with variance inflation (nonnegative factors).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaPrior {
    /// Double exponential centred at 0 with the given scale.
    Laplace { scale: f64, dim: usize },
    /// Exponential parameterized by its mean (rate = 1/mean).
    Exponential { mean: f64, dim: usize },
}

impl GammaPrior {
    pub fn laplace(scale: f64, dim: usize) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidOptions(format!(
                "Laplace scale must be positive, got {scale}"
            )));
        }
        Ok(GammaPrior::Laplace { scale, dim })
    }

    pub fn exponential(mean: f64, dim: usize) -> Result<Self> {
        if !(mean > 0.0) {
            return Err(Error::InvalidOptions(format!(
                "Exponential mean must be positive, got {mean}"
            )));
        }
        Ok(GammaPrior::Exponential { mean, dim })
    }

    pub fn dim(&self) -> usize {
        match *self {
            GammaPrior::Laplace { dim, .. } | GammaPrior::Exponential { dim, .. } => dim,
        }
    }

    /// The adjustment kind this prior is defined over.
    pub fn adjustment_kind(&self) -> AdjustmentKind {
        match self {
            GammaPrior::Laplace { .. } => AdjustmentKind::MeanShift,
            GammaPrior::Exponential { .. } => AdjustmentKind::VarianceInflation,
        }
    }

    /// Log-density of a single component; −∞ below 0 for Exponential.
    pub fn component_log_density(&self, g: f64) -> f64 {
        match *self {
            GammaPrior::Laplace { scale, .. } => -(2.0 * scale).ln() - g.abs() / scale,
            GammaPrior::Exponential { mean, .. } => {
                if g < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -mean.ln() - g / mean
                }
            }
        }
    }

    /// One draw of a single component.
    pub fn sample_component<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            GammaPrior::Laplace { scale, .. } => {
                let u: f64 = rng.random::<f64>() - 0.5;
                -scale * u.signum() * (-2.0 * u.abs()).ln_1p()
            }
            GammaPrior::Exponential { mean, .. } => {
                let e: f64 = rng.sample(rand_distr::Exp1);
                mean * e
            }
        }
    }

    /// One full adjustment vector drawn from the prior.
    pub fn sample_vector<R: Rng + ?Sized>(&self, rng: &mut R) -> AdjustmentVector {
        let g: Vec<f64> = (0..self.dim()).map(|_| self.sample_component(rng)).collect();
        AdjustmentVector::new(g, self.adjustment_kind())
            .expect("prior draws always satisfy the kind constraint")
    }
}

/// Joint log prior of an adjustment vector: sum of component log-densities.
/// The prior kind must match the vector's kind.
pub fn gamma_log_prior(gamma: &AdjustmentVector, prior: &GammaPrior) -> Result<f64> {
    if gamma.kind() != prior.adjustment_kind() {
        return Err(Error::InvalidOptions(format!(
            "adjustment kind {:?} does not match prior {:?}",
            gamma.kind(),
            prior
        )));
    }
    if gamma.len() != prior.dim() {
        return Err(Error::Dimension(format!(
            "adjustment length {} does not match prior dimension {}",
            gamma.len(),
            prior.dim()
        )));
    }
    Ok(gamma
        .as_slice()
        .iter()
        .map(|&g| prior.component_log_density(g))
        .sum())
}

/// i.i.d. prior draws, used as the reference sample for the
/// posterior-vs-prior divergence diagnostic.
pub fn sample_gamma_prior<R: Rng + ?Sized>(
    prior: &GammaPrior,
    n: usize,
    rng: &mut R,
) -> Result<Vec<AdjustmentVector>> {
    if n == 0 {
        return Err(Error::InvalidOptions(
            "prior sample size must be at least 1".into(),
        ));
    }
    Ok((0..n).map(|_| prior.sample_vector(rng)).collect())
}

/// Marginal prior density of one θ component.
#[derive(Clone)]
pub enum ComponentDensity {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, variance: f64 },
    /// User-supplied log-density; such components cannot be sampled.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for ComponentDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComponentDensity::Uniform { lo, hi } => write!(f, "Uniform({lo}, {hi})"),
            ComponentDensity::Normal { mean, variance } => write!(f, "Normal({mean}, {variance})"),
            ComponentDensity::Custom(_) => write!(f, "Custom(log-density)"),
        }
    }
}

impl ComponentDensity {
    fn log_density(&self, theta: f64) -> f64 {
        match self {
            ComponentDensity::Uniform { lo, hi } => {
                if theta >= *lo && theta <= *hi {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            ComponentDensity::Normal { mean, variance } => {
                let z = theta - mean;
                -0.5 * (2.0 * std::f64::consts::PI * variance).ln() - 0.5 * z * z / variance
            }
            ComponentDensity::Custom(f) => f(theta),
        }
    }
}

/// One θ component: a marginal density plus the reparameterization its
/// proposals use.
#[derive(Debug, Clone)]
pub struct ThetaComponent {
    pub density: ComponentDensity,
    pub transform: Transform,
}

/// Independent product prior over θ with per-component transforms.
#[derive(Debug, Clone)]
pub struct ThetaPrior {
    components: Vec<ThetaComponent>,
}

impl ThetaPrior {
    pub fn new(components: Vec<ThetaComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidOptions("prior needs at least one component".into()));
        }
        for c in &components {
            if let ComponentDensity::Uniform { lo, hi } = c.density {
                if !(hi > lo) {
                    return Err(Error::InvalidOptions(format!(
                        "uniform bounds out of order: ({lo}, {hi})"
                    )));
                }
            }
            if let ComponentDensity::Normal { variance, .. } = c.density {
                if !(variance > 0.0) {
                    return Err(Error::InvalidOptions(format!(
                        "normal variance must be positive, got {variance}"
                    )));
                }
            }
        }
        Ok(Self { components })
    }

    /// Uniform box prior; every component gets a logit-affine transform.
    pub fn uniform_box(bounds: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            bounds
                .iter()
                .map(|&(lo, hi)| ThetaComponent {
                    density: ComponentDensity::Uniform { lo, hi },
                    transform: Transform::LogitAffine { lo, hi },
                })
                .collect(),
        )
    }

    /// Independent normal components on the identity transform.
    pub fn normal(means_vars: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            means_vars
                .iter()
                .map(|&(mean, variance)| ThetaComponent {
                    density: ComponentDensity::Normal { mean, variance },
                    transform: Transform::Identity,
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[ThetaComponent] {
        &self.components
    }

    /// Joint log-density in the original parameterization; −∞ outside
    /// the support.
    pub fn log_density(&self, theta: &[f64]) -> f64 {
        assert_eq!(theta.len(), self.dim(), "theta length mismatch");
        theta
            .iter()
            .zip(&self.components)
            .map(|(&t, c)| c.density.log_density(t))
            .sum()
    }

    /// One draw from the prior. Custom components cannot be sampled.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        self.components
            .iter()
            .map(|c| match &c.density {
                ComponentDensity::Uniform { lo, hi } => Ok(rng.random_range(*lo..*hi)),
                ComponentDensity::Normal { mean, variance } => {
                    let z: f64 = rng.sample(StandardNormal);
                    Ok(mean + variance.sqrt() * z)
                }
                ComponentDensity::Custom(_) => Err(Error::InvalidOptions(
                    "custom prior components cannot be sampled directly".into(),
                )),
            })
            .collect()
    }

    pub fn to_unconstrained(&self, theta: &[f64]) -> Result<Vec<f64>> {
        theta
            .iter()
            .zip(&self.components)
            .map(|(&t, c)| c.transform.to_unconstrained(t))
            .collect()
    }

    pub fn from_unconstrained(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.components)
            .map(|(&xi, c)| c.transform.from_unconstrained(xi))
            .collect()
    }

    /// Sum of component log-Jacobians at the unconstrained point x.
    pub fn log_jacobian(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.components)
            .map(|(&xi, c)| c.transform.log_jacobian(xi))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_log_prior_values() {
        let lap = GammaPrior::laplace(0.5, 1).unwrap();
        let g0 = AdjustmentVector::new(vec![0.0], AdjustmentKind::MeanShift).unwrap();
        assert!((gamma_log_prior(&g0, &lap).unwrap() - 0.0).abs() < 1e-15);

        let lap2 = GammaPrior::laplace(0.5, 2).unwrap();
        let g = AdjustmentVector::new(vec![0.5, -1.0], AdjustmentKind::MeanShift).unwrap();
        assert!((gamma_log_prior(&g, &lap2).unwrap() - (-3.0)).abs() < 1e-12);

        let exp2 = GammaPrior::exponential(0.5, 2).unwrap();
        let z = AdjustmentVector::zeros(2, AdjustmentKind::VarianceInflation);
        assert!((gamma_log_prior(&z, &exp2).unwrap() - 2.0 * 2.0_f64.ln()).abs() < 1e-12);
        assert_eq!(exp2.component_log_density(-0.1), f64::NEG_INFINITY);
    }

    #[test]
    fn gamma_prior_kind_mismatch_is_an_error() {
        let lap = GammaPrior::laplace(0.5, 2).unwrap();
        let v = AdjustmentVector::zeros(2, AdjustmentKind::VarianceInflation);
        assert!(matches!(
            gamma_log_prior(&v, &lap),
            Err(Error::InvalidOptions(_))
        ));
    }

    #[test]
    fn gamma_prior_maximized_at_zero() {
        for prior in [
            GammaPrior::laplace(0.5, 1).unwrap(),
            GammaPrior::exponential(0.5, 1).unwrap(),
        ] {
            let at0 = prior.component_log_density(0.0);
            for k in 1..=60 {
                let g = 0.1 * k as f64;
                assert!(prior.component_log_density(g) < at0);
            }
        }
    }

    #[test]
    fn laplace_sample_moment_check() {
        let prior = GammaPrior::laplace(0.5, 1).unwrap();
        let mut rng = crate::rng::rng_from(41, &[1]);
        let n = 100_000;
        let mean_abs: f64 = (0..n)
            .map(|_| prior.sample_component(&mut rng).abs())
            .sum::<f64>()
            / n as f64;
        // E|γ| = λ; sd of |γ| is λ, so 3 se ≈ 0.0047
        assert!((mean_abs - 0.5).abs() < 0.01, "mean |γ| = {mean_abs}");
    }

    #[test]
    fn exponential_sample_moment_check() {
        let prior = GammaPrior::exponential(0.5, 3).unwrap();
        let mut rng = crate::rng::rng_from(41, &[2]);
        let draws = sample_gamma_prior(&prior, 100_000, &mut rng).unwrap();
        let mut sum = 0.0;
        for v in &draws {
            for &g in v.as_slice() {
                assert!(g >= 0.0);
                sum += g;
            }
        }
        let mean = sum / (3.0 * draws.len() as f64);
        assert!((mean - 0.5).abs() < 0.01, "mean γ = {mean}");
        assert!(sample_gamma_prior(&prior, 0, &mut rng).is_err());
    }

    #[test]
    fn theta_log_prior_values() {
        let u = ThetaPrior::uniform_box(&[(-1.0, 1.0)]).unwrap();
        assert!((u.log_density(&[0.0]) - 0.5_f64.ln()).abs() < 1e-15);
        assert_eq!(u.log_density(&[1.5]), f64::NEG_INFINITY);

        let n = ThetaPrior::normal(&[(0.0, 10.0)]).unwrap();
        let want = -0.5 * (2.0 * std::f64::consts::PI * 10.0).ln();
        assert!((n.log_density(&[0.0]) - want).abs() < 1e-12);
        assert!((want - (-2.0702310797016956)).abs() < 1e-12);
    }

    #[test]
    fn densities_integrate_to_one() {
        // trapezoid quadrature over a wide grid
        fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
            let h = (hi - lo) / n as f64;
            let mut acc = 0.5 * (f(lo) + f(hi));
            for i in 1..n {
                acc += f(lo + i as f64 * h);
            }
            acc * h
        }
        let lap = GammaPrior::laplace(0.5, 1).unwrap();
        let i1 = integrate(|g| lap.component_log_density(g).exp(), -12.0, 12.0, 400_000);
        assert!((i1 - 1.0).abs() < 1e-6, "laplace integral {i1}");

        let exp = GammaPrior::exponential(0.5, 1).unwrap();
        let i2 = integrate(|g| exp.component_log_density(g).exp(), 0.0, 20.0, 400_000);
        assert!((i2 - 1.0).abs() < 1e-6, "exponential integral {i2}");

        let norm = ThetaPrior::normal(&[(0.0, 10.0)]).unwrap();
        let i3 = integrate(|t| norm.log_density(&[t]).exp(), -40.0, 40.0, 400_000);
        assert!((i3 - 1.0).abs() < 1e-6, "normal integral {i3}");

        let unif = ThetaPrior::uniform_box(&[(1.0, 2.0)]).unwrap();
        let i4 = integrate(|t| unif.log_density(&[t]).exp(), 1.0, 2.0, 10_000);
        assert!((i4 - 1.0).abs() < 1e-6, "uniform integral {i4}");
    }

    #[test]
    fn prior_round_trip_through_transforms() {
        let prior = ThetaPrior::uniform_box(&[(1.0, 2.0), (0.0, 100.0), (0.0, 0.9)]).unwrap();
        let mut rng = crate::rng::rng_from(41, &[3]);
        for _ in 0..1000 {
            let theta = prior.sample(&mut rng).unwrap();
            let x = prior.to_unconstrained(&theta).unwrap();
            let back = prior.from_unconstrained(&x);
            for (a, b) in theta.iter().zip(&back) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn custom_component_density_is_usable_but_not_sampleable() {
        let c = ThetaPrior::new(vec![ThetaComponent {
            density: ComponentDensity::Custom(Arc::new(|t: f64| -t.abs())),
            transform: Transform::Identity,
        }])
        .unwrap();
        assert_eq!(c.log_density(&[2.0]), -2.0);
        let mut rng = crate::rng::rng_from(41, &[4]);
        assert!(c.sample(&mut rng).is_err());
    }
}
