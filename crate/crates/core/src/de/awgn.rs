//! Mapping of erasure-channel thresholds to the binary-input Gaussian
//! channel by matching capacities.

use crate::error::{Error, Result};

/// Absolute accuracy of the capacity integral.
const CAPACITY_TOL: f64 = 1e-9;

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Capacity in bits of BPSK over AWGN with noise standard deviation `sigma`.
pub fn biawgn_capacity(sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 1.0;
    }
    if !sigma.is_finite() {
        return 0.0;
    }
    // Transmit +1; y = 1 + σz with z standard normal, LLR = 2y/σ².
    let s2 = sigma * sigma;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let integrand = |z: f64| {
        let llr = 2.0 * (1.0 + sigma * z) / s2;
        norm * (-0.5 * z * z).exp() * softplus(-llr)
    };
    let loss: f64 = [(-40.0, -8.0), (-8.0, 0.0), (0.0, 8.0), (8.0, 40.0)]
        .iter()
        .map(|&(a, b)| {
            quadrature::double_exponential::integrate(integrand, a, b, CAPACITY_TOL / 8.0).integral
        })
        .sum();
    (1.0 - loss / std::f64::consts::LN_2).clamp(0.0, 1.0)
}

/// `σ` with `C_G(σ) = capacity`, by bisection on `ln σ`.
pub fn sigma_for_capacity(capacity: f64) -> Result<f64> {
    if !(capacity > 0.0 && capacity < 1.0) {
        return Err(Error::config(format!("capacity {capacity} outside (0, 1)")));
    }
    let (mut lo, mut hi) = ((1e-3f64).ln(), (1e3f64).ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if biawgn_capacity(mid.exp()) > capacity {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Gaussian-channel threshold equivalent to an erasure threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AwgnThreshold {
    pub sigma: f64,
    /// `E_b/N_0` in dB at the given code rate.
    pub ebn0_db: f64,
}

pub fn ebn0_db(sigma: f64, rate: f64) -> f64 {
    10.0 * (1.0 / (2.0 * rate * sigma * sigma)).log10()
}

pub fn awgn_sigma_from_bec(eps: f64, rate: f64) -> Result<AwgnThreshold> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::config(format!(
            "erasure probability {eps} outside (0, 1)"
        )));
    }
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::config(format!("rate {rate} outside (0, 1]")));
    }
    let sigma = sigma_for_capacity(1.0 - eps)?;
    Ok(AwgnThreshold {
        sigma,
        ebn0_db: ebn0_db(sigma, rate),
    })
}
