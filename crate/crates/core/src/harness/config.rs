use serde::{Deserialize, Serialize};

use crate::bounds::NoiseModel;
use crate::chain::ChainInput;
use crate::predictors::LossSpec;
use crate::{Error, Result};

pub const MIN_REPLICATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One learning realization, `R` validation continuations from `X_n`.
    #[default]
    Conditional,
    /// A fresh stationary trajectory per replication.
    Marginal,
}

/// Where the noise modulus `ω` comes from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseConfig {
    /// `α = 1` with `h` the margin of a binary chain.
    #[default]
    Margin,
    MammenTsybakov {
        alpha: f64,
        h: f64,
    },
    Tabulated {
        points: Vec<(f64, f64)>,
    },
}

/// Event families checked for tail domination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Hoeffding,
    Bernstein,
    Noise,
}

fn all_families() -> Vec<Family> {
    vec![Family::Hoeffding, Family::Bernstein, Family::Noise]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checks {
    #[serde(default = "all_families")]
    pub tails: Vec<Family>,
    #[serde(default = "yes")]
    pub oracle_gaps: bool,
    #[serde(default = "yes")]
    pub coupling: bool,
    #[serde(default = "yes")]
    pub noise_condition: bool,
    /// Largest gap for the coupling check.
    #[serde(default = "default_coupling_horizon")]
    pub coupling_horizon: usize,
}

fn default_coupling_horizon() -> usize {
    20
}

impl Default for Checks {
    fn default() -> Self {
        Self {
            tails: all_families(),
            oracle_gaps: true,
            coupling: true,
            noise_condition: true,
            coupling_horizon: default_coupling_horizon(),
        }
    }
}

fn default_epsilons() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 20.0).collect()
}
fn default_delta() -> f64 {
    0.1
}
fn default_half() -> f64 {
    0.5
}
fn default_scale() -> f64 {
    1.0
}
fn is_unit(v: &f64) -> bool {
    *v == 1.0
}

/// One experiment, as read from a JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub chain: ChainInput,
    /// Composite window `p`; defaults to the largest of the chain order and
    /// the candidate orders.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_order: Option<usize>,
    /// Memory order of each candidate class, in candidate-index order.
    pub candidates: Vec<usize>,
    /// Selection loss; misclassification when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossSpec>,
    /// Training loss; the selection loss when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training_loss: Option<LossSpec>,
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub gap: usize,
    pub replications: usize,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_half")]
    pub a: f64,
    #[serde(default = "default_half")]
    pub theta: f64,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub checks: Checks,
    /// Multiplies every bound before comparison. Only for negative controls.
    #[serde(default = "default_scale", skip_serializing_if = "is_unit")]
    pub bound_scale: f64,
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {v} must lie in (0, 1)")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < MIN_REPLICATIONS {
            return Err(Error::Config(format!(
                "replications = {} is below the minimum of {MIN_REPLICATIONS}",
                self.replications
            )));
        }
        if self.candidates.is_empty() {
            return Err(Error::Config("at least one candidate order is required".into()));
        }
        if self.n == 0 || self.m == 0 {
            return Err(Error::Config(format!("n = {} and m = {} must be positive", self.n, self.m)));
        }
        if self.gap >= self.m {
            return Err(Error::Config(format!("gap = {} must be below m = {}", self.gap, self.m)));
        }
        if self.epsilons.is_empty() {
            return Err(Error::Config("the epsilon grid is empty".into()));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::Config(format!("epsilon {e} lies outside [0, 1]")));
        }
        open_unit("delta", self.delta)?;
        open_unit("a", self.a)?;
        open_unit("theta", self.theta)?;
        if !(self.bound_scale > 0.0 && self.bound_scale.is_finite()) {
            return Err(Error::Config(format!("bound_scale = {} must be positive", self.bound_scale)));
        }
        if let Some(p) = self.embedding_order {
            if let Some(q) = self.candidates.iter().find(|&&q| q > p) {
                return Err(Error::Config(format!("candidate order {q} exceeds the embedding order {p}")));
            }
        }
        match &self.noise {
            NoiseConfig::Margin => {}
            NoiseConfig::MammenTsybakov { alpha, h } => {
                NoiseModel::mammen_tsybakov(*alpha, *h)?;
            }
            NoiseConfig::Tabulated { points } => {
                NoiseModel::tabulated(points.clone())?;
            }
        }
        Ok(())
    }
}
