use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::kernel::{time_reversal, StationaryDistribution, TransitionKernel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    /// Convergence threshold handed to the symmetric eigensolver.
    pub eigen_tol: f64,
    /// Sweep cap for the eigensolver (0 means "until convergence").
    pub eigen_max_iter: usize,
    /// Hard cap on `k`.
    pub max_k: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { eigen_tol: 1e-10, eigen_max_iter: 10_000, max_k: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDiagnostics {
    pub gamma_ps: f64,
    pub argmax_k: usize,
    /// `γ((K*)^k K^k) / k` for `k = 1..=k_stop`.
    pub per_k: Vec<f64>,
    pub k_stop: usize,
    /// True when the search stopped at `max_k` instead of the exact rule.
    pub capped: bool,
}

/// Pseudo-spectral gap `max_k γ((K*)^k K^k) / k`.
///
/// `A_k = (K*)^k K^k` is self-adjoint on `L²(Q)`, so `D^{1/2} A_k D^{−1/2}`
/// with `D = diag(Q)` is symmetric and shares its spectrum. Because
/// `γ(A_k) ≤ 1`, every later `k` satisfies `γ_k ≤ 1/k`; once `k ≥ 1/M` for the
/// running maximum `M`, no later term can win and the search stops.
pub fn pseudo_spectral_gap(
    kernel: &TransitionKernel,
    q: &StationaryDistribution,
    options: SpectralOptions,
) -> Result<SpectralDiagnostics> {
    let reversal = time_reversal(kernel, q)?;
    let n = kernel.size();
    let sqrt_q: Vec<f64> = q.probs.iter().map(|p| p.sqrt()).collect();

    let mut forward = DMatrix::<f64>::identity(n, n);
    let mut backward = DMatrix::<f64>::identity(n, n);
    let mut per_k = Vec::new();
    let mut best = 0.0;
    let mut argmax_k = 1;
    let mut capped = false;
    let mut k = 0;
    loop {
        k += 1;
        forward = &forward * kernel.matrix();
        backward = &backward * reversal.matrix();
        let a = &backward * &forward;
        let sym = DMatrix::from_fn(n, n, |i, j| {
            let s_ij = sqrt_q[i] * a[(i, j)] / sqrt_q[j];
            let s_ji = sqrt_q[j] * a[(j, i)] / sqrt_q[i];
            0.5 * (s_ij + s_ji)
        });
        let eig = SymmetricEigen::try_new(sym, options.eigen_tol, options.eigen_max_iter)
            .ok_or(Error::EigensolverFailure { k })?;
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(|a, b| b.total_cmp(a));
        let gap = (1.0 - values[1]).clamp(0.0, 1.0);
        let gamma_k = gap / k as f64;
        per_k.push(gamma_k);
        if gamma_k > best {
            best = gamma_k;
            argmax_k = k;
        }
        if best > 0.0 && k as f64 >= 1.0 / best {
            break;
        }
        if k >= options.max_k {
            capped = true;
            break;
        }
    }
    Ok(SpectralDiagnostics { gamma_ps: best, argmax_k, per_k, k_stop: k, capped })
}
