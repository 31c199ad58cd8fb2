use crate::config::CouplingConfig;
use crate::de::evolution::{de_run, DeOptions};
use crate::de::transfer::Transfer;
use crate::error::{Error, Result};

/// Result of a threshold search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Threshold {
    /// Midpoint of the final bracket.
    pub eps: f64,
    /// Largest tested erasure probability at which DE converged.
    pub lower: f64,
    /// Smallest tested erasure probability at which DE failed.
    pub upper: f64,
    /// DE iterations used at `lower`.
    pub iterations: usize,
}

/// Bisection on the channel erasure probability until the bracket
/// `[converges, fails]` is narrower than `tol`.
pub fn threshold_bisect(
    cfg: &CouplingConfig,
    tol: f64,
    transfer: &dyn Transfer,
    opts: &DeOptions,
) -> Result<Threshold> {
    threshold_bisect_in(cfg, 0.0, 1.0, tol, transfer, opts)
}

/// Bisection started from `[lo, hi]`. The bracket is widened towards 0 or
/// 1 if DE does not converge at `lo` or does converge at `hi`.
pub fn threshold_bisect_in(
    cfg: &CouplingConfig,
    lo: f64,
    hi: f64,
    tol: f64,
    transfer: &dyn Transfer,
    opts: &DeOptions,
) -> Result<Threshold> {
    cfg.validate_ensemble()?;
    if tol.is_nan() || tol < 1e-5 {
        return Err(Error::config(format!(
            "bisection tolerance {tol} below 1e-5"
        )));
    }
    if !(0.0..=1.0).contains(&lo) || !(lo..=1.0).contains(&hi) {
        return Err(Error::config(format!("bad bracket [{lo}, {hi}]")));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut iterations = 0;
    if lo > 0.0 {
        let out = de_run(cfg, lo, transfer, opts);
        if out.converged {
            iterations = out.iterations;
        } else {
            hi = lo;
            lo = 0.0;
        }
    }
    if hi < 1.0 && hi > lo {
        let out = de_run(cfg, hi, transfer, opts);
        if out.converged {
            lo = hi;
            iterations = out.iterations;
            hi = 1.0;
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let out = de_run(cfg, mid, transfer, opts);
        if out.converged {
            lo = mid;
            iterations = out.iterations;
        } else {
            hi = mid;
        }
    }
    Ok(Threshold {
        eps: 0.5 * (lo + hi),
        lower: lo,
        upper: hi,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Family, Rational};
    use crate::de::transfer::default_grid;

    #[test]
    fn bracket_is_widened_when_wrong() {
        let cfg = CouplingConfig::new(Family::Pic, Rational::new(1, 4), 1);
        let opts = DeOptions::default();
        let f = default_grid();
        let full = threshold_bisect(&cfg, 1e-4, f, &opts).unwrap();
        for (lo, hi) in [(0.5, 0.6), (0.72, 0.9), (0.7, 0.75)] {
            let t = threshold_bisect_in(&cfg, lo, hi, 1e-4, f, &opts).unwrap();
            assert!(t.upper - t.lower <= 1e-4);
            assert!(
                (t.eps - full.eps).abs() < 2e-4,
                "{lo} {hi}: {} vs {}",
                t.eps,
                full.eps
            );
        }
        assert!(threshold_bisect(&cfg, 1e-6, f, &opts).is_err());
        assert!(threshold_bisect_in(&cfg, 0.8, 0.7, 1e-4, f, &opts).is_err());
    }
}
