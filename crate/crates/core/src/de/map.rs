//! MAP threshold of shortened and punctured turbo codes from the area
//! theorem applied to the BP extrinsic curves of uncoupled density
//! evolution.

use crate::de::evolution::punctured_erasure;
use crate::de::transfer::Transfer;
use crate::error::{Error, Result};

/// Fixed point of uncoupled turbo density evolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TurboFixedPoint {
    pub p_u: f64,
    pub p_l: f64,
    pub q_u: f64,
    pub q_l: f64,
}

impl TurboFixedPoint {
    pub const ERASED: TurboFixedPoint = TurboFixedPoint {
        p_u: 1.0,
        p_l: 1.0,
        q_u: 1.0,
        q_l: 1.0,
    };
}

/// Iterates uncoupled DE from `start` until no probability moves by more
/// than `1e-13`. A fraction `shortened` of the information positions is
/// known to the decoder; parity survives puncturing with ratio `rho`.
///
/// Starting from any point above the largest fixed point (in particular
/// from the fixed point at a larger `eps`) gives the same limit as
/// starting from full erasure.
pub fn uncoupled_fixed_point(
    eps: f64,
    shortened: f64,
    rho: f64,
    transfer: &dyn Transfer,
    start: TurboFixedPoint,
) -> TurboFixedPoint {
    let q = punctured_erasure(eps, rho);
    let sys = eps * (1.0 - shortened);
    let mut s = start;
    for _ in 0..200_000 {
        let (p_u, q_u) = transfer.eval(sys * s.p_l, q);
        let (p_l, q_l) = transfer.eval(sys * p_u, q);
        let next = TurboFixedPoint { p_u, p_l, q_u, q_l };
        let moved = (next.p_u - s.p_u)
            .abs()
            .max((next.p_l - s.p_l).abs())
            .max((next.q_u - s.q_u).abs())
            .max((next.q_l - s.q_l).abs());
        s = next;
        if moved < 1e-13 {
            break;
        }
    }
    s
}

/// Fraction of the `K` information positions that must be shortened to
/// reach rate `rate` with parity survival `rho`.
pub fn shortening_fraction(rate: f64, rho: f64) -> f64 {
    1.0 - 2.0 * rho * rate / (1.0 - rate)
}

/// Averaged extrinsic erasure probability of a transmitted bit.
fn exit_value(rate: f64, fp: &TurboFixedPoint) -> f64 {
    rate * fp.p_u * fp.p_l + (1.0 - rate) * 0.5 * (fp.q_u + fp.q_l)
}

/// ε solving `R = ∫_ε^1 h(x) dx`, with `h` the average extrinsic erasure
/// probability of the transmitted bits at the BP fixed point of the
/// shortened/punctured turbo code.
pub fn map_threshold(rate: f64, transfer: &dyn Transfer, rho: f64, grid_step: f64) -> Result<f64> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::config(format!("rate {rate} outside (0, 1)")));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::config(format!(
            "survival ratio {rho} outside (0, 1]"
        )));
    }
    let shortened = shortening_fraction(rate, rho);
    if !(0.0..1.0).contains(&shortened) {
        return Err(Error::config(format!(
            "rate {rate} not reachable with survival ratio {rho} (shortening {shortened})"
        )));
    }
    if !(grid_step > 0.0 && grid_step <= 0.01) {
        return Err(Error::config(format!(
            "grid step {grid_step} outside (0, 0.01]"
        )));
    }
    let steps = (1.0 / grid_step).ceil() as usize;
    let h = 1.0 / steps as f64;
    let mut fp = TurboFixedPoint::ERASED;
    let mut upper = exit_value(rate, &fp);
    let mut area = 0.0;
    for k in (0..steps).rev() {
        let eps = k as f64 * h;
        fp = uncoupled_fixed_point(eps, shortened, rho, transfer, fp);
        let lower = exit_value(rate, &fp);
        let slab = 0.5 * (upper + lower) * h;
        if area + slab >= rate {
            // Linear integrand within the slab: solve for the crossing.
            let need = rate - area;
            let (a, b) = (upper, lower);
            let slope = (b - a) / h;
            let d = if slope.abs() < 1e-15 {
                need / a
            } else {
                (-a + (a * a + 2.0 * slope * need).max(0.0).sqrt()) / slope
            };
            return Ok(eps + h - d);
        }
        area += slab;
        upper = lower;
    }
    Err(Error::config(format!(
        "area under the extrinsic curve {area} never reaches the rate {rate}"
    )))
}
