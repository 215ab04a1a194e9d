use std::path::Path;

use holdout_core::bounds::{Bound, NoiseModel};
use holdout_core::chain::ChainInput;
use holdout_core::harness::ExperimentConfig;
use holdout_core::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

fn default_horizon() -> usize {
    20
}

/// Input of `diagnose`: a bare chain document, or a chain with options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseConfig {
    pub chain: ChainInput,
    /// Diagnose the composite chain of this window instead of the base chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_order: Option<usize>,
    /// Minimum length of the reported `d(t)` profile.
    #[serde(default = "default_horizon")]
    pub horizon: usize,
}

impl DiagnoseConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        if value.get("chain").is_some() {
            Ok(serde_json::from_str(text)?)
        } else {
            let chain: ChainInput = serde_json::from_str(text)?;
            Ok(Self { chain, embedding_order: None, horizon: default_horizon() })
        }
    }
}

/// Grid axes expanded into one row per combination. An empty axis keeps
/// the value from the base query.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub m: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilon: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delta: Vec<f64>,
}

/// Input of `bounds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub bounds: Vec<Bound>,
    /// When present, `t_mix` and `gamma_ps` come from this chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_order: Option<usize>,
    /// Fields of a bound query; `t_mix` may be left out when a chain is given.
    pub query: Map<String, Value>,
    #[serde(default)]
    pub grid: Grid,
}

/// Input of `noise`: a model, or a binary chain whose margin defines the
/// `α = 1` model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<NoiseModel>,
    /// Validation lengths to solve `τ*_m` for.
    pub m: Vec<usize>,
    /// Points at which `ω` is tabulated in the output.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub omega_at: Vec<f64>,
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

pub fn load_experiment(text: &str, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut config: ExperimentConfig = serde_json::from_str(text)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}
