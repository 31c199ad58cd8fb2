//! Resolved `key = value` settings from a config file plus command-line
//! overrides.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use coupled_turbo::config::parse_rational;
use coupled_turbo::{CouplingConfig, Rational};

/// Every key a config file or `--set` may name.
pub const KEYS: &[&str] = &[
    // chain
    "family",
    "lambda",
    "lambda_upper",
    "lambda_lower",
    "m",
    "chain_len",
    "k",
    "rho",
    "puncture_coupled",
    "random_placement",
    "terminate",
    // density evolution
    "tol",
    "max_iter",
    "conv",
    "stall",
    "schedule",
    // search
    "rate",
    "lambda_step",
    "lambda_min",
    "lambda_max",
    "refine_step",
    // experiment
    "eps",
    "decoder",
    "window",
    "max_sweeps",
    "inner_iterations",
    "min_errors",
    "max_chains",
    "batch",
    // other commands
    "map_step",
    "points",
    "transfer",
    "output",
    "plot",
    "seed",
    "chain",
    "trace",
];

const COUPLING_KEYS: &[&str] = &[
    "family",
    "lambda",
    "lambda_upper",
    "lambda_lower",
    "m",
    "chain_len",
    "k",
    "rho",
    "puncture_coupled",
    "random_placement",
    "terminate",
];

#[derive(Clone, Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn canonical(key: &str) -> String {
    let k = key.trim().replace('-', "_");
    match k.as_str() {
        "L" => "chain_len".into(),
        "K" => "k".into(),
        _ => k,
    }
}

impl Settings {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{origin}:{}: expected `key = value`", n + 1))?;
            s.set(k, v).with_context(|| format!("{origin}:{}", n + 1))?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = canonical(key);
        if !KEYS.contains(&key.as_str()) {
            bail!("unknown configuration key {key:?}");
        }
        self.values.insert(key, value.trim().to_string());
        Ok(())
    }

    pub fn set_default(&mut self, key: &str, value: &str) {
        self.values
            .entry(key.to_string())
            .or_insert_with(|| value.to_string());
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("{key} = {v:?}: {e}")))
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn rational(&self, key: &str) -> Result<Option<Rational>> {
        self.raw(key)
            .map(|v| parse_rational(v).map_err(|e| anyhow!("{key}: {e}")))
            .transpose()
    }

    pub fn require_rational(&self, key: &str) -> Result<Rational> {
        self.rational(key)?
            .ok_or_else(|| anyhow!("missing required setting {key:?}"))
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let Some(v) = self.raw(key) else {
            bail!("missing required setting {key:?}");
        };
        v.split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|e| anyhow!("{key}: {x:?}: {e}"))
            })
            .collect()
    }

    /// Chain parameters on top of the library defaults.
    pub fn coupling(&self) -> Result<CouplingConfig> {
        let mut cfg = CouplingConfig::default();
        // λ before its split, so a split given alone is checked against it.
        for key in COUPLING_KEYS {
            if let Some(v) = self.raw(key) {
                cfg.set(key, v).map_err(|e| anyhow!("{e}"))?;
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_rejects_unknown_keys() {
        let s =
            Settings::parse("# c\nfamily = ppc  # trailing\n\nlambda=1/7\nL = 50\n", "t").unwrap();
        assert_eq!(s.raw("family"), Some("ppc"));
        assert_eq!(s.rational("lambda").unwrap(), Some(Rational::new(1, 7)));
        assert_eq!(s.get::<usize>("chain_len").unwrap(), Some(50));
        assert!(Settings::parse("lamda = 1/2\n", "t").is_err());
        assert!(Settings::parse("just text\n", "t").is_err());
    }

    #[test]
    fn builds_coupling_config() {
        let s = Settings::parse(
            "family = ppc\nlambda = 1/2\nm = 2\nk = 40\nrho = 0.9\n",
            "t",
        )
        .unwrap();
        let c = s.coupling().unwrap();
        assert_eq!(c.m, 2);
        assert_eq!(c.k, 40);
        assert_eq!(c.rho, Rational::new(9, 10));
        assert!(c.validate_code().is_ok());
    }
}
