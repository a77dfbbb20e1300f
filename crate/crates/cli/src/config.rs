use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lrdlab::arfima_figarch::ArfimaFigarchParams;
use lrdlab::{Frequency, HurstMethod};
use serde::Deserialize;

/// Optional TOML configuration; every key mirrors a command-line flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub data: Option<PathBuf>,
    pub frequency: Option<String>,
    pub method: Option<String>,
    pub ensemble: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub truncation_lag: Option<usize>,
    pub format: Option<String>,
    pub label: Option<String>,
    pub params: Option<ParamConfig>,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamConfig {
    pub mu: Option<f64>,
    pub phi: Option<f64>,
    pub theta: Option<f64>,
    pub d_m: Option<f64>,
    pub omega: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub d_v: Option<f64>,
    pub nu: Option<f64>,
}

impl ParamConfig {
    /// Fields set here override `base`.
    pub fn apply(&self, base: ArfimaFigarchParams) -> ArfimaFigarchParams {
        ArfimaFigarchParams {
            mu: self.mu.unwrap_or(base.mu),
            phi: self.phi.unwrap_or(base.phi),
            theta: self.theta.unwrap_or(base.theta),
            d_m: self.d_m.unwrap_or(base.d_m),
            omega: self.omega.unwrap_or(base.omega),
            alpha: self.alpha.unwrap_or(base.alpha),
            beta: self.beta.unwrap_or(base.beta),
            d_v: self.d_v.unwrap_or(base.d_v),
            nu: self.nu.unwrap_or(base.nu),
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
    }

    pub fn frequency(&self) -> Result<Option<Frequency>> {
        self.frequency
            .as_deref()
            .map(|s| s.parse().map_err(anyhow::Error::from))
            .transpose()
    }

    pub fn method(&self) -> Result<Option<HurstMethod>> {
        self.method
            .as_deref()
            .map(|s| s.parse().map_err(anyhow::Error::from))
            .transpose()
    }
}
