//! Symmetric α-stable variates by the Chambers–Mallows–Stuck construction.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};

/// One draw from the symmetric (skewness 0, location 0) stable law with
/// stability `alpha` in (1,2] and scale `delta`:
///
///   X = δ · sin(αU)/(cos U)^{1/α} · (cos((α−1)U)/W)^{(1−α)/α}
///
/// with U uniform on (−π/2, π/2) and W standard exponential. α=2 reduces
/// to N(0, 2δ²), α→1 to the Cauchy law with scale δ.
pub fn sample_stable(alpha: f64, delta: f64, rng: &mut dyn RngCore) -> Result<f64> {
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
    let u = (rng.random::<f64>() - 0.5) * std::f64::consts::PI;
    let w = loop {
        let w: f64 = rng.sample(rand_distr::Exp1);
        if w > 0.0 {
            break w;
        }
    };
    let raw = (alpha * u).sin() / u.cos().powf(1.0 / alpha)
        * (((alpha - 1.0) * u).cos() / w).powf((1.0 - alpha) / alpha);
    Ok(delta * raw)
}
