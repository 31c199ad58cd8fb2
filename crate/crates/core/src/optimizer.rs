//! Joint choice of coupling ratio and puncturing at a target rate.

use rayon::prelude::*;

use crate::config::{to_f64, CouplingConfig, Family, Rational};
use crate::coupling::{asymptotic_rate, rho_for_rate};
use crate::de::{threshold_bisect_in, DeOptions, Threshold, Transfer};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SearchSpec {
    pub family: Family,
    pub target_rate: Rational,
    pub m: usize,
    /// DE chain length.
    pub chain_len: usize,
    pub lambda_step: Rational,
    pub lambda_min: Rational,
    /// `None` means the family's maximum (1/2 for PIC, 1 for PPC).
    pub lambda_max: Option<Rational>,
    /// Step of the pass around the best grid point; `None` skips it.
    pub refine_step: Option<Rational>,
    pub tol: f64,
    pub de: DeOptions,
}

impl SearchSpec {
    pub fn new(family: Family, target_rate: Rational, m: usize) -> Self {
        SearchSpec {
            family,
            target_rate,
            m,
            chain_len: 100,
            lambda_step: Rational::new(1, 100),
            lambda_min: Rational::from_integer(0),
            lambda_max: None,
            refine_step: Some(Rational::new(1, 500)),
            tol: 1e-4,
            de: DeOptions::default(),
        }
    }

    fn max_lambda(&self) -> Rational {
        self.lambda_max.unwrap_or(match self.family {
            Family::Pic => Rational::new(1, 2),
            Family::Ppc => Rational::from_integer(1),
        })
    }

    pub fn describe(&self) -> Vec<(String, String)> {
        vec![
            ("family".into(), self.family.to_string()),
            ("rate".into(), self.target_rate.to_string()),
            ("m".into(), self.m.to_string()),
            ("chain_len".into(), self.chain_len.to_string()),
            ("lambda_step".into(), self.lambda_step.to_string()),
            ("lambda_min".into(), self.lambda_min.to_string()),
            ("lambda_max".into(), self.max_lambda().to_string()),
            (
                "refine_step".into(),
                self.refine_step.map_or("none".into(), |r| r.to_string()),
            ),
            ("tol".into(), self.tol.to_string()),
            ("max_iter".into(), self.de.max_iter.to_string()),
        ]
    }

    /// DE configuration of one `(λ, ρ)` point.
    pub fn config(&self, lambda: Rational, rho: Rational) -> CouplingConfig {
        CouplingConfig {
            chain_len: self.chain_len,
            rho,
            ..CouplingConfig::new(self.family, lambda, self.m)
        }
    }
}

/// Survival ratio giving `rate` at `lambda`, if it lies in `(0, 1]`.
pub fn feasible_rho(rate: Rational, lambda: Rational) -> Option<Rational> {
    let rho = rho_for_rate(rate, lambda);
    (rho > Rational::from_integer(0) && rho <= Rational::from_integer(1)).then_some(rho)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub lambda: Rational,
    pub rho: Rational,
    pub threshold: Threshold,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    /// Smallest λ among the points tied for the best threshold.
    pub best: CurvePoint,
    /// λ range of the points whose bisection bracket overlaps the best one.
    pub tie: (Rational, Rational),
    /// Every evaluated point, ordered by λ.
    pub curve: Vec<CurvePoint>,
    /// Whether the grid curve rises and then falls, allowing plateaus.
    pub unimodal: bool,
}

fn evaluate(
    spec: &SearchSpec,
    lambdas: &[Rational],
    transfer: &dyn Transfer,
) -> Result<Vec<CurvePoint>> {
    let hi = 1.0 - to_f64(spec.target_rate);
    lambdas
        .par_iter()
        .filter_map(|&lambda| feasible_rho(spec.target_rate, lambda).map(|rho| (lambda, rho)))
        .map(|(lambda, rho)| {
            let cfg = spec.config(lambda, rho);
            let threshold = threshold_bisect_in(&cfg, 0.0, hi, spec.tol, transfer, &spec.de)?;
            Ok(CurvePoint {
                lambda,
                rho,
                threshold,
            })
        })
        .collect()
}

fn is_unimodal(curve: &[CurvePoint], tol: f64) -> bool {
    let mut falling = false;
    for w in curve.windows(2) {
        let d = w[1].threshold.eps - w[0].threshold.eps;
        if d < -tol {
            falling = true;
        } else if d > tol && falling {
            return false;
        }
    }
    true
}

/// Maximizes the BP threshold over the feasible `λ` grid at the target rate.
pub fn joint_search(spec: &SearchSpec, transfer: &dyn Transfer) -> Result<SearchResult> {
    let zero = Rational::from_integer(0);
    if spec.target_rate <= zero || spec.target_rate >= Rational::from_integer(1) {
        return Err(Error::config(format!(
            "target rate {} outside (0, 1)",
            spec.target_rate
        )));
    }
    if spec.lambda_step <= zero {
        return Err(Error::config("λ step must be positive"));
    }
    let max = spec.max_lambda();
    let mut grid = Vec::new();
    let mut lambda = spec.lambda_min;
    while lambda <= max {
        grid.push(lambda);
        lambda += spec.lambda_step;
    }
    let mut curve = evaluate(spec, &grid, transfer)?;
    if curve.is_empty() {
        return Err(Error::config(format!(
            "no λ in [{}, {max}] reaches rate {} with ρ in (0, 1]",
            spec.lambda_min, spec.target_rate
        )));
    }
    let unimodal = is_unimodal(&curve, spec.tol);

    if let Some(step) = spec
        .refine_step
        .filter(|s| *s > zero && *s < spec.lambda_step)
    {
        let top = argmax(&curve);
        let centre = curve[top].lambda;
        let mut extra = Vec::new();
        let mut d = step;
        while d < spec.lambda_step {
            for l in [centre - d, centre + d] {
                if l >= spec.lambda_min && l <= max {
                    extra.push(l);
                }
            }
            d += step;
        }
        curve.extend(evaluate(spec, &extra, transfer)?);
        curve.sort_by_key(|a| a.lambda);
    }

    let top = curve[argmax(&curve)].threshold;
    let tied: Vec<&CurvePoint> = curve
        .iter()
        .filter(|p| indistinguishable(&p.threshold, &top))
        .collect();
    let tie = (tied[0].lambda, tied[tied.len() - 1].lambda);
    let best = tied[0].clone();
    debug_assert_eq!(asymptotic_rate(best.lambda, best.rho), spec.target_rate);
    Ok(SearchResult {
        best,
        tie,
        curve,
        unimodal,
    })
}

/// Whether the bisection brackets of two thresholds overlap, so neither is
/// known to be larger.
fn indistinguishable(a: &Threshold, b: &Threshold) -> bool {
    a.lower < b.upper && b.lower < a.upper
}

/// Index of the largest threshold; the first one on ties.
fn argmax(curve: &[CurvePoint]) -> usize {
    let mut best = 0;
    for (i, p) in curve.iter().enumerate() {
        if p.threshold.eps > curve[best].threshold.eps {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::de::{default_grid, threshold_bisect};

    fn r(a: i64, b: i64) -> Rational {
        Rational::new(a, b)
    }

    #[test]
    fn feasibility_follows_rate_identity() {
        assert_eq!(feasible_rho(r(1, 2), r(1, 2)), Some(r(1, 4)));
        assert_eq!(feasible_rho(r(1, 3), r(0, 1)), Some(r(1, 1)));
        // Below the mother rate without coupling needs ρ > 1.
        assert_eq!(feasible_rho(r(1, 4), r(0, 1)), None);
        assert_eq!(feasible_rho(r(1, 2), r(1, 1)), None);
        for i in 0..=50 {
            let lambda = r(i, 100);
            if let Some(rho) = feasible_rho(r(2, 3), lambda) {
                assert_eq!(asymptotic_rate(lambda, rho), r(2, 3));
            }
        }
    }

    #[test]
    fn empty_grid_is_an_error() {
        let mut spec = SearchSpec::new(Family::Pic, r(1, 5), 1);
        spec.lambda_max = Some(r(1, 4));
        assert!(matches!(
            joint_search(&spec, default_grid()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn coupling_beats_uncoupled_at_mother_rate() {
        let mut spec = SearchSpec::new(Family::Pic, r(1, 3), 1);
        spec.lambda_step = r(1, 20);
        spec.lambda_max = Some(r(1, 5));
        spec.refine_step = None;
        spec.tol = 2e-4;
        let f = default_grid();
        let res = joint_search(&spec, f).unwrap();
        // At rate 1/3 only λ = 0 has ρ = 1; every coupled point is punctured.
        let uncoupled =
            threshold_bisect(&spec.config(r(0, 1), r(1, 1)), 2e-4, f, &spec.de).unwrap();
        assert!(res.best.lambda > r(0, 1));
        assert!(res.best.threshold.eps > uncoupled.eps + 0.005);
        assert_eq!(asymptotic_rate(res.best.lambda, res.best.rho), r(1, 3));
        for w in res.curve.windows(2) {
            assert!(w[0].lambda < w[1].lambda);
        }
        assert!(res.tie.0 <= res.best.lambda && res.best.lambda <= res.tie.1);
    }

    #[test]
    fn ties_need_overlapping_brackets() {
        let th = |lo: f64, hi: f64| Threshold {
            eps: 0.5 * (lo + hi),
            lower: lo,
            upper: hi,
            iterations: 0,
        };
        let best = th(0.6540, 0.6541);
        assert!(indistinguishable(&th(0.6540, 0.6541), &best));
        assert!(indistinguishable(&th(0.65395, 0.65405), &best));
        // Less than tol apart but strictly below.
        assert!(!indistinguishable(&th(0.6539, 0.6540), &best));
    }

    #[test]
    fn unimodality_check() {
        let pt = |l: i64, e: f64| CurvePoint {
            lambda: r(l, 10),
            rho: r(1, 1),
            threshold: Threshold {
                eps: e,
                lower: e,
                upper: e,
                iterations: 0,
            },
        };
        let up_down = vec![pt(0, 0.1), pt(1, 0.2), pt(2, 0.2), pt(3, 0.15)];
        assert!(is_unimodal(&up_down, 1e-4));
        let bumpy = vec![pt(0, 0.1), pt(1, 0.2), pt(2, 0.15), pt(3, 0.18)];
        assert!(!is_unimodal(&bumpy, 1e-4));
    }
}
