//! First-order moving average model, its autocovariance summaries, and
//! the stochastic-volatility process used as the true DGP in the
//! misspecification experiment.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::{Model, RawData};
use crate::error::{Error, Result};
use crate::moments::SummaryVector;

/// Sample autocovariances η_j = (1/T)·Σ_{t=1+j}^T z_t·z_{t−j}, divisor T
/// at every lag.
pub fn autocovariances(series: &[f64], lags: &[usize]) -> Result<Vec<f64>> {
    let t = series.len();
    if let Some(&bad) = lags.iter().find(|&&j| j >= t) {
        return Err(Error::Dimension(format!(
            "lag {bad} needs a series longer than {bad}, got {t}"
        )));
    }
    Ok(lags
        .iter()
        .map(|&j| {
            let mut acc = 0.0;
            for i in j..t {
                acc += series[i] * series[i - j];
            }
            acc / t as f64
        })
        .collect())
}

/// MA(1) process z_t = e_t + θ·e_{t−1} with one pre-sample innovation
/// e_0 ~ N(0,1), making the series exactly stationary.
pub fn simulate_ma1(theta: f64, t: usize, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
    if !(theta > -1.0 && theta < 1.0) {
        return Err(Error::Domain(format!(
            "moving-average coefficient must lie in (−1,1), got {theta}"
        )));
    }
    if t < 3 {
        return Err(Error::InvalidOptions(format!(
            "series length must be at least 3, got {t}"
        )));
    }
    let mut prev: f64 = rng.sample(StandardNormal);
    let mut out = Vec::with_capacity(t);
    for _ in 0..t {
        let e: f64 = rng.sample(StandardNormal);
        out.push(e + theta * prev);
        prev = e;
    }
    Ok(out)
}

/// Probability limits of the MA(1) autocovariance summaries at lags 0,1,2.
pub fn ma1_limit_summaries(theta: f64) -> [f64; 3] {
    [1.0 + theta * theta, theta, 0.0]
}

/// Stochastic volatility process: h_1 from the stationary law
/// N(ω/(1−ρ), σ_v²/(1−ρ²)), h_t = ω + ρ·h_{t−1} + σ_v·v_t, and
/// y_t = exp(h_t/2)·u_t with independent standard normal u, v.
pub fn simulate_sv(omega: f64, rho: f64, sigma_v: f64, t: usize, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!(
            "persistence must lie in (0,1), got {rho}"
        )));
    }
    if !(sigma_v > 0.0 && sigma_v < 1.0) {
        return Err(Error::Domain(format!(
            "volatility-of-volatility must lie in (0,1), got {sigma_v}"
        )));
    }
    let z: f64 = rng.sample(StandardNormal);
    let mut h = omega / (1.0 - rho) + sigma_v / (1.0 - rho * rho).sqrt() * z;
    let mut out = Vec::with_capacity(t);
    for _ in 0..t {
        let u: f64 = rng.sample(StandardNormal);
        out.push((0.5 * h).exp() * u);
        let v: f64 = rng.sample(StandardNormal);
        h = omega + rho * h + sigma_v * v;
    }
    Ok(out)
}

/// Probability limits of the observed summaries when the data follow the
/// stochastic volatility process: lag-0 is E[y²] = exp(μ_h + σ_h²/2),
/// higher lags vanish.
pub fn sv_limit_summaries(omega: f64, rho: f64, sigma_v: f64) -> [f64; 3] {
    let mu_h = omega / (1.0 - rho);
    let var_h = sigma_v * sigma_v / (1.0 - rho * rho);
    [(mu_h + 0.5 * var_h).exp(), 0.0, 0.0]
}

/// Conditional-sum-of-squares MA(1) estimate: e_0 = 0, e_t = z_t − θ·e_{t−1},
/// θ̂ minimizes Σe_t² over (−0.99, 0.99) by golden-section search.
pub fn ma1_mle(series: &[f64]) -> Result<f64> {
    if series.len() < 3 {
        return Err(Error::InvalidOptions(
            "the moving-average estimate needs at least 3 observations".into(),
        ));
    }
    let sse = |theta: f64| -> f64 {
        let mut prev = 0.0;
        let mut acc = 0.0;
        for &z in series {
            let e = z - theta * prev;
            acc += e * e;
            prev = e;
        }
        acc
    };
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (-0.99, 0.99);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (sse(c), sse(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = sse(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = sse(d);
        }
    }
    Ok(0.5 * (a + b))
}

/// MA(1) model with autocovariance summaries at lags 0, 1, 2.
#[derive(Debug, Clone)]
pub struct Ma1Model {
    t: usize,
}

impl Ma1Model {
    pub fn new(t: usize) -> Result<Self> {
        if t < 3 {
            return Err(Error::InvalidOptions(format!(
                "series length must be at least 3, got {t}"
            )));
        }
        Ok(Self { t })
    }

    pub fn t(&self) -> usize {
        self.t
    }
}

impl Model for Ma1Model {
    fn d_theta(&self) -> usize {
        1
    }

    fn d_eta(&self) -> usize {
        3
    }

    fn id(&self) -> &'static str {
        "ma1"
    }

    fn simulate(&self, theta: &[f64], rng: &mut dyn RngCore) -> Result<RawData> {
        if theta.len() != 1 {
            return Err(Error::Dimension(format!(
                "moving-average model takes a scalar parameter, got length {}",
                theta.len()
            )));
        }
        Ok(RawData::Series(simulate_ma1(theta[0], self.t, rng)?))
    }

    fn summarize(&self, data: &RawData) -> Result<SummaryVector> {
        SummaryVector::new(autocovariances(data.as_series()?, &[0, 1, 2])?)
    }
}
