use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kernel::{StationaryDistribution, TransitionKernel};
use crate::{Error, Result};

pub const DEFAULT_MIXING_LEVEL: f64 = 0.25;

/// Geometric ergodicity certificate `sup_x d_TV(K^t(x,·), Q) ≤ C ρ^t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub c: f64,
    pub rho: f64,
}

impl Certificate {
    /// `(C, ρ) = (2, exp(−ln 2 / t_mix))`, valid because
    /// `d(t) ≤ 2^{−⌊t / t_mix⌋}`.
    pub fn canonical(t_mix: usize) -> Self {
        Self { c: 2.0, rho: (-std::f64::consts::LN_2 / t_mix.max(1) as f64).exp() }
    }

    /// `C ρ^t`, computed in log space.
    pub fn at(&self, t: usize) -> f64 {
        self.c * (t as f64 * self.rho.ln()).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingProfile {
    pub epsilon_level: f64,
    /// `d(0), d(1), …, d(T)` with `T ≥ t_mix`.
    pub d_values: Vec<f64>,
    pub t_mix: usize,
    pub certificate_c: f64,
    pub certificate_rho: f64,
}

impl MixingProfile {
    pub fn certificate(&self) -> Certificate {
        Certificate { c: self.certificate_c, rho: self.certificate_rho }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingOptions {
    pub level: f64,
    /// Largest `t` examined; `None` means `10·S²`.
    pub cap: Option<usize>,
    /// Minimum number of steps kept in the profile beyond `t_mix`.
    pub horizon: usize,
}

impl Default for MixingOptions {
    fn default() -> Self {
        Self { level: DEFAULT_MIXING_LEVEL, cap: None, horizon: 0 }
    }
}

fn worst_start_distance(power: &DMatrix<f64>, q: &StationaryDistribution) -> f64 {
    power
        .row_iter()
        .map(|row| 0.5 * row.iter().zip(&q.probs).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `d(t) = sup_x ‖K^t(x,·) − Q‖_TV` for `t = 0..=horizon` via exact powers.
pub fn distance_profile(kernel: &TransitionKernel, q: &StationaryDistribution, horizon: usize) -> Result<Vec<f64>> {
    if q.len() != kernel.size() {
        return Err(Error::DimensionMismatch { left: q.len(), right: kernel.size() });
    }
    let n = kernel.size();
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut d = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        if t > 0 {
            power = &power * kernel.matrix();
        }
        d.push(worst_start_distance(&power, q));
    }
    Ok(d)
}

/// Smallest `t` with `d(t) ≤ level`, plus the canonical certificate.
pub fn mixing_time(kernel: &TransitionKernel, q: &StationaryDistribution, options: MixingOptions) -> Result<MixingProfile> {
    if !(options.level > 0.0 && options.level < 1.0) {
        return Err(Error::Range(format!("mixing level must lie in (0, 1), got {}", options.level)));
    }
    if q.len() != kernel.size() {
        return Err(Error::DimensionMismatch { left: q.len(), right: kernel.size() });
    }
    let n = kernel.size();
    let cap = options.cap.unwrap_or(10 * n * n);
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut d_values = Vec::new();
    let mut t_mix = None;
    let mut t = 0;
    loop {
        if t > 0 {
            power = &power * kernel.matrix();
        }
        let d = worst_start_distance(&power, q);
        d_values.push(d);
        if t_mix.is_none() && d <= options.level {
            t_mix = Some(t);
        }
        if let Some(found) = t_mix {
            if t >= found.max(options.horizon) {
                break;
            }
        } else if t >= cap {
            return Err(Error::HorizonExceeded { level: options.level, cap });
        }
        t += 1;
    }
    let t_mix = t_mix.expect("loop exits only once t_mix is known");
    let certificate = Certificate::canonical(t_mix);
    Ok(MixingProfile {
        epsilon_level: options.level,
        d_values,
        t_mix,
        certificate_c: certificate.c,
        certificate_rho: certificate.rho,
    })
}
