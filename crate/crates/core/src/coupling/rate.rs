use crate::config::{base_rate, CouplingConfig, Family, Rational};
use crate::error::{Error, Result};

/// Exact rate of the finite chain in `cfg`, tails excluded.
pub fn rate_of(cfg: &CouplingConfig) -> Result<Rational> {
    cfg.validate_code()?;
    let k = cfg.k as i64;
    let n = 3 * k;
    let l = cfg.chain_len as i64;
    let m = cfg.m as i64;
    let lk = (cfg.lambda * k).to_integer();
    let padding = match cfg.family {
        Family::Pic => lk * (m + 1) / 2,
        Family::Ppc => (1..=m).map(|j| (j * lk / m).min(k - lk)).sum(),
    };
    let info = l * (k - lk) - padding;
    let sent = l * (n - lk) - padding - l * cfg.punctured_per_block() as i64;
    Ok(Rational::new(info, sent))
}

/// Rate as `L → ∞`: `(1-λ) / ((1/R₀ - 1)ρ + 1 - λ)`.
pub fn asymptotic_rate(lambda: Rational, rho: Rational) -> Rational {
    let one = Rational::from_integer(1);
    (one - lambda) / ((one / base_rate() - one) * rho + one - lambda)
}

/// Parity survival ratio that gives asymptotic rate `rate` at coupling
/// ratio `lambda`.
pub fn rho_for_rate(rate: Rational, lambda: Rational) -> Rational {
    let one = Rational::from_integer(1);
    (one / rate - one) / (one / base_rate() - one) * (one - lambda)
}

/// Coupling ratio that reaches `rate` without puncturing.
pub fn lambda_for_rho(rate: Rational, rho: Rational) -> Result<Rational> {
    let one = Rational::from_integer(1);
    if rho <= Rational::from_integer(0) {
        return Err(Error::config("survival ratio must be positive"));
    }
    // (1/R - 1)(1 - λ) = (1/R₀ - 1)ρ
    Ok(one - (one / base_rate() - one) * rho / (one / rate - one))
}
