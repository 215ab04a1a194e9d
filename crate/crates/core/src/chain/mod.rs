//! Exact diagnostics of finite-state, uniformly ergodic Markov chains.

mod input;
mod kernel;
mod markovize;
mod mixing;
mod spectral;

use serde::{Deserialize, Serialize};

pub use input::ChainInput;
pub use kernel::{
    is_primitive, stationary_distribution, stationary_distribution_with_tolerance, time_reversal,
    total_variation, StateSpace, StationaryDistribution, TransitionKernel, MIN_REVERSIBLE_MASS,
    ROW_SUM_TOL, STATIONARY_RESIDUAL_TOL,
};
pub use markovize::{
    markovize, markovize_with_cap, ContextCodec, HigherOrderChainSpec, MarkovizedChain,
    DEFAULT_COMPOSITE_CAP,
};
pub use mixing::{
    distance_profile, mixing_time, Certificate, MixingOptions, MixingProfile, DEFAULT_MIXING_LEVEL,
};
pub use spectral::{pseudo_spectral_gap, SpectralDiagnostics, SpectralOptions};

use crate::Result;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DiagnoseOptions {
    pub mixing: MixingOptions,
    pub spectral: SpectralOptions,
}

/// Everything the bounds need to know about a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub stationary: StationaryDistribution,
    pub mixing: MixingProfile,
    pub spectral: SpectralDiagnostics,
}

impl ChainDiagnostics {
    pub fn t_mix(&self) -> usize {
        self.mixing.t_mix
    }

    pub fn gamma_ps(&self) -> f64 {
        self.spectral.gamma_ps
    }
}

pub fn diagnose(kernel: &TransitionKernel, options: DiagnoseOptions) -> Result<ChainDiagnostics> {
    let stationary = stationary_distribution(kernel)?;
    diagnose_with_stationary(kernel, stationary, options)
}

pub fn diagnose_with_stationary(
    kernel: &TransitionKernel,
    stationary: StationaryDistribution,
    options: DiagnoseOptions,
) -> Result<ChainDiagnostics> {
    let mixing = mixing_time(kernel, &stationary, options.mixing)?;
    let spectral = pseudo_spectral_gap(kernel, &stationary, options.spectral)?;
    Ok(ChainDiagnostics { stationary, mixing, spectral })
}
