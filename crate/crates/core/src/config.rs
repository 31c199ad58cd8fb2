//! Ensemble and code parameters shared by the encoder, the decoders and the
//! density-evolution engine.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// Rate of the underlying rate-1/3 turbo code (before tails).
pub fn base_rate() -> Rational {
    Rational::new(1, 3)
}

/// Parses `"a/b"`, an integer, or a terminating decimal such as `"0.44"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Ok(r) = Rational::from_str(s) {
        return Ok(r);
    }
    let bad = || Error::config(format!("not a rational number: {s:?}"));
    let (int, frac) = s.split_once('.').ok_or_else(bad)?;
    if frac.is_empty() || frac.len() > 12 || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let neg = int.starts_with('-');
    let int_part: i64 = if int.is_empty() || int == "-" {
        0
    } else {
        int.parse().map_err(|_| bad())?
    };
    let den = 10i64.pow(frac.len() as u32);
    let frac_part: i64 = frac.parse().map_err(|_| bad())?;
    let mag = int_part.abs() * den + frac_part;
    Ok(Rational::new(if neg { -mag } else { mag }, den))
}

pub fn to_f64(r: Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// Partially information-coupled.
    Pic,
    /// Partially parity-coupled.
    Ppc,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Pic => "pic",
            Family::Ppc => "ppc",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pic" | "pic-tc" => Ok(Family::Pic),
            "ppc" | "ppc-tc" => Ok(Family::Ppc),
            other => Err(Error::config(format!("unknown family {other:?}"))),
        }
    }
}

/// Parameters of a coupled turbo chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CouplingConfig {
    pub family: Family,
    /// Coupling ratio: fraction of the `K` turbo inputs that are coupled in.
    pub lambda: Rational,
    /// Coupling memory.
    pub m: usize,
    /// Number of coupled code blocks.
    pub chain_len: usize,
    /// Information length of the component turbo code.
    pub k: usize,
    /// Fraction of parity bits that survive puncturing.
    pub rho: Rational,
    /// PPC only: coupled parity drawn from the (upper, lower) streams.
    /// `None` means the equal split.
    pub lambda_split: Option<(Rational, Rational)>,
    /// Whether coupled parity segments of a PPC chain may be punctured.
    pub puncture_coupled: bool,
    /// Draw the positions of coupled bits inside each block at random
    /// instead of placing them as contiguous segments.
    pub random_placement: bool,
    /// Terminate both component encoders of every block.
    pub terminate: bool,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig {
            family: Family::Pic,
            lambda: Rational::new(1, 2),
            m: 1,
            chain_len: 100,
            k: 1000,
            rho: Rational::from_integer(1),
            lambda_split: None,
            puncture_coupled: true,
            random_placement: false,
            terminate: true,
        }
    }
}

impl CouplingConfig {
    pub fn new(family: Family, lambda: Rational, m: usize) -> Self {
        CouplingConfig {
            family,
            lambda,
            m,
            ..Default::default()
        }
    }

    /// `(λ^U, λ^L)`; for PIC both halves are reported but only their sum
    /// matters.
    pub fn split(&self) -> (Rational, Rational) {
        self.lambda_split
            .unwrap_or_else(|| (self.lambda / 2, self.lambda / 2))
    }

    /// Checks the parameters that the density-evolution model needs.
    pub fn validate_ensemble(&self) -> Result<()> {
        let zero = Rational::zero();
        let one = Rational::from_integer(1);
        let max_lambda = match self.family {
            Family::Pic => Rational::new(1, 2),
            Family::Ppc => one,
        };
        if self.lambda < zero || self.lambda > max_lambda {
            return Err(Error::config(format!(
                "coupling ratio {} outside [0, {}] for {}",
                self.lambda, max_lambda, self.family
            )));
        }
        if self.m == 0 {
            return Err(Error::config("coupling memory must be at least 1"));
        }
        if self.chain_len < 2 * self.m {
            return Err(Error::config(format!(
                "chain length {} must be at least 2m = {}",
                self.chain_len,
                2 * self.m
            )));
        }
        if self.rho <= zero || self.rho > one {
            return Err(Error::config(format!(
                "puncturing survival ratio {} outside (0, 1]",
                self.rho
            )));
        }
        if let Some((u, l)) = self.lambda_split {
            if self.family == Family::Ppc && (u + l != self.lambda || u < zero || l < zero) {
                return Err(Error::config(format!(
                    "split {u} + {l} does not add up to λ = {}",
                    self.lambda
                )));
            }
        }
        Ok(())
    }

    /// Checks everything needed to build an actual chain of length-`K`
    /// component codewords.
    pub fn validate_code(&self) -> Result<()> {
        self.validate_ensemble()?;
        if self.k == 0 {
            return Err(Error::config("information length K must be positive"));
        }
        let seg = self.lambda * self.k as i64 / self.m as i64;
        if !seg.is_integer() {
            return Err(Error::config(format!(
                "λK/m = {seg} is not an integer (λ = {}, K = {}, m = {})",
                self.lambda, self.k, self.m
            )));
        }
        if self.k > u32::MAX as usize / 4 {
            return Err(Error::config(format!("K = {} is too large", self.k)));
        }
        let punctured = (Rational::from_integer(1) - self.rho) * 2 * self.k as i64;
        if !punctured.is_integer() {
            return Err(Error::config(format!(
                "2K(1 - ρ) = {punctured} parity bits per block is not an integer"
            )));
        }
        if self.family == Family::Ppc {
            let (u, l) = self.split();
            for (name, part) in [("upper", u), ("lower", l)] {
                let n = part * self.k as i64 / self.m as i64;
                if !n.is_integer() {
                    return Err(Error::config(format!(
                        "{name} coupled parity segment λK/m = {n} is not an integer"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Coupled segment length `λK/m`.
    pub fn segment_len(&self) -> usize {
        (self.lambda * self.k as i64 / self.m as i64).to_integer() as usize
    }

    /// Parity bits punctured in each block, `2K(1 - ρ)`.
    pub fn punctured_per_block(&self) -> usize {
        ((Rational::from_integer(1) - self.rho) * 2 * self.k as i64).to_integer() as usize
    }

    /// Rendering as `key = value` lines, used in output headers.
    pub fn describe(&self) -> Vec<(String, String)> {
        let (u, l) = self.split();
        vec![
            ("family".into(), self.family.to_string()),
            ("lambda".into(), self.lambda.to_string()),
            ("lambda_upper".into(), u.to_string()),
            ("lambda_lower".into(), l.to_string()),
            ("m".into(), self.m.to_string()),
            ("chain_len".into(), self.chain_len.to_string()),
            ("k".into(), self.k.to_string()),
            ("rho".into(), self.rho.to_string()),
            ("puncture_coupled".into(), self.puncture_coupled.to_string()),
            ("random_placement".into(), self.random_placement.to_string()),
            ("terminate".into(), self.terminate.to_string()),
        ]
    }

    /// Sets one parameter from its `describe` key and text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::config(format!("{key}: {what} {value:?}"));
        let int = || {
            value
                .trim()
                .parse::<usize>()
                .map_err(|_| bad("not an integer"))
        };
        let flag = || {
            value
                .trim()
                .parse::<bool>()
                .map_err(|_| bad("not a boolean"))
        };
        match key {
            "family" => self.family = value.parse()?,
            "lambda" => self.lambda = parse_rational(value)?,
            "lambda_upper" | "lambda_lower" => {
                let (mut u, mut l) = self.split();
                let v = parse_rational(value)?;
                if key == "lambda_upper" {
                    u = v;
                } else {
                    l = v;
                }
                self.lambda_split = if u == l && u + l == self.lambda {
                    None
                } else {
                    Some((u, l))
                };
            }
            "m" => self.m = int()?,
            "chain_len" | "L" => self.chain_len = int()?,
            "k" | "K" => self.k = int()?,
            "rho" => self.rho = parse_rational(value)?,
            "puncture_coupled" => self.puncture_coupled = flag()?,
            "random_placement" => self.random_placement = flag()?,
            "terminate" => self.terminate = flag()?,
            _ => return Err(Error::config(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }
}
