use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Below this a denominator is treated as zero.
pub const DIVISION_GUARD: f64 = 1e-300;

/// Which side of a Bernstein-type localisation: `over` bounds
/// `L̂/(1+a) − 𝕃`, `under` bounds `𝕃 − L̂/(1−a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Over,
    Under,
}

impl Side {
    /// `a(1 + a)` or `a(1 − a)`.
    pub fn factor(self, a: f64) -> f64 {
        match self {
            Side::Over => a * (1.0 + a),
            Side::Under => a * (1.0 - a),
        }
    }
}

pub(crate) fn check_open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Range(format!("{name} = {v} must lie in (0, 1)")))
    }
}

pub(crate) fn check_epsilon(eps: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Error::Range(format!("epsilon = {eps} must lie in [0, 1]")))
    }
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Range(format!("{name} = {v} must be positive and finite")))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::Range(format!("gamma_ps = {gamma} must lie in (0, 1]")))
    }
}

fn check_gap(m: usize, b: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::Range("m must be at least 1".into()));
    }
    if b >= m {
        return Err(Error::Range(format!("gap b = {b} must be below m = {m}")));
    }
    Ok(())
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Range("candidate count N must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn check_variance(v: f64, b: f64) -> Result<()> {
    if !(0.0..=0.25).contains(&v) {
        return Err(Error::Range(format!("variance proxy V = {v} must lie in [0, 0.25]")));
    }
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::Range(format!("centering bound B = {b} must lie in [0, 1]")));
    }
    Ok(())
}

/// `2 exp(−b ln2 / t_mix)`: the coupling cost of dropping `b` observations.
fn coupling_term(b: usize, t_mix: f64) -> f64 {
    2.0 * (-(b as f64) * LN_2 / t_mix).exp()
}

/// `ln(2 e^{ln2/t_mix} + 1)`.
fn ln_prefactor(t_mix: f64) -> f64 {
    (2.0 * (LN_2 / t_mix).exp()).ln_1p()
}

/// `8(1 + 1/γ) + 20`.
fn bernstein_constant(gamma: f64) -> f64 {
    8.0 * (1.0 + 1.0 / gamma) + 20.0
}

/// `16(1 + 1/γ) m τ* + 80 θ`.
fn noise_constant(m: f64, theta: f64, gamma: f64, tau_star: f64) -> f64 {
    16.0 * (1.0 + 1.0 / gamma) * m * tau_star + 80.0 * theta
}

/// Hoeffding bound on the last `m − b` validation losses, plus the cost of
/// the gap: `exp(−2(m−b)ε²/(9 t_mix)) + 2 exp(−b ln2 / t_mix)`.
pub fn hoeffding_gap_tail(m: usize, b: usize, eps: f64, t_mix: f64) -> Result<f64> {
    check_gap(m, b)?;
    check_epsilon(eps)?;
    check_positive("t_mix", t_mix)?;
    let k = (m - b) as f64;
    Ok((-2.0 * k * eps * eps / (9.0 * t_mix)).exp() + coupling_term(b, t_mix))
}

/// Deviation tail of the full-window empirical loss with `b` tuned:
/// `(2 e^{ln2/t_mix} + 1) exp(−m ε² ln2 / ((1 + 9 ln2) t_mix))`.
pub fn hoeffding_tail(m: usize, eps: f64, t_mix: f64) -> Result<f64> {
    check_gap(m, 0)?;
    check_epsilon(eps)?;
    check_positive("t_mix", t_mix)?;
    let exponent = m as f64 * eps * eps * LN_2 / ((1.0 + 9.0 * LN_2) * t_mix);
    Ok((ln_prefactor(t_mix) - exponent).exp())
}

/// Bernstein tail for a sum of `n` bounded terms:
/// `exp(−n²ε²γ / (8(n + 1/γ)V + 20 n ε B))`.
pub fn bernstein_tail_raw(n: usize, eps: f64, gamma: f64, v: f64, b: f64) -> Result<f64> {
    check_gap(n, 0)?;
    check_epsilon(eps)?;
    check_gamma(gamma)?;
    check_variance(v, b)?;
    let n = n as f64;
    let denominator = 8.0 * (n + 1.0 / gamma) * v + 20.0 * n * eps * b;
    if denominator < DIVISION_GUARD {
        return Err(Error::DivisionGuard(denominator));
    }
    Ok((-(n * n * eps * eps * gamma) / denominator).exp())
}

/// Deviation of a sum of `n` bounded terms exceeded with probability at
/// most `δ`: `√(8(γ+1)/γ² · nV · ln(1/δ)) + (20/γ) B ln(1/δ)`.
pub fn bernstein_deviation_radius(n: usize, delta: f64, gamma: f64, v: f64, b: f64) -> Result<f64> {
    check_gap(n, 0)?;
    check_open_unit("delta", delta)?;
    check_gamma(gamma)?;
    check_variance(v, b)?;
    let log = -delta.ln();
    let n = n as f64;
    Ok((8.0 * (gamma + 1.0) / (gamma * gamma) * n * v * log).sqrt() + 20.0 / gamma * b * log)
}

/// Localised Bernstein tail on the last `m − b` losses:
/// `exp(−(m−b) γ a(1±a) ε / (8(1+1/γ)+20)) + 2 exp(−b ln2 / t_mix)`.
pub fn bernstein_gap_tail(m: usize, b: usize, eps: f64, a: f64, gamma: f64, t_mix: f64, side: Side) -> Result<f64> {
    check_gap(m, b)?;
    check_epsilon(eps)?;
    check_open_unit("a", a)?;
    check_gamma(gamma)?;
    check_positive("t_mix", t_mix)?;
    let k = (m - b) as f64;
    Ok((-k * gamma * side.factor(a) * eps / bernstein_constant(gamma)).exp() + coupling_term(b, t_mix))
}

/// `(1 + 2 e^{ln2/t_mix}) exp(−a(1±a) m ε / (4 t_mix (8(1+1/γ)+20)))`.
pub fn bernstein_tail(m: usize, eps: f64, a: f64, gamma: f64, t_mix: f64, side: Side) -> Result<f64> {
    check_gap(m, 0)?;
    check_epsilon(eps)?;
    check_open_unit("a", a)?;
    check_gamma(gamma)?;
    check_positive("t_mix", t_mix)?;
    let exponent = side.factor(a) * m as f64 * eps / (4.0 * t_mix * bernstein_constant(gamma));
    Ok((ln_prefactor(t_mix) - exponent).exp())
}

/// `ln(e N (2 e^{ln2/t_mix} + 1))`.
fn union_log(n: usize, t_mix: f64) -> f64 {
    1.0 + (n as f64).ln() + ln_prefactor(t_mix)
}

/// Bound on `E(𝕃(ĝ_k̂) − L̂_m(ĝ_k̂))` (and its mirror for `k̃`).
pub fn expectation_bound_hoeffding(n: usize, m: usize, t_mix: f64) -> Result<f64> {
    check_count(n)?;
    check_gap(m, 0)?;
    check_positive("t_mix", t_mix)?;
    Ok((union_log(n, t_mix) * (1.0 + 9.0 * LN_2) * t_mix / (LN_2 * m as f64)).sqrt())
}

/// Bound on `E(𝕃(ĝ_k̂) − 𝕃(ĝ_k̃))`: twice [`expectation_bound_hoeffding`].
pub fn oracle_gap_hoeffding(n: usize, m: usize, t_mix: f64) -> Result<f64> {
    Ok(2.0 * expectation_bound_hoeffding(n, m, t_mix)?)
}

/// `4 t_mix (8(1+1/γ)+20) ln(e N (2 e^{ln2/t_mix} + 1)) / (a(1±a) m)`.
pub fn expectation_bound_bernstein(n: usize, m: usize, a: f64, t_mix: f64, gamma: f64, side: Side) -> Result<f64> {
    check_count(n)?;
    check_gap(m, 0)?;
    check_open_unit("a", a)?;
    check_gamma(gamma)?;
    check_positive("t_mix", t_mix)?;
    Ok(4.0 * t_mix * bernstein_constant(gamma) * union_log(n, t_mix) / (side.factor(a) * m as f64))
}

fn check_risk(name: &str, r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::Range(format!("{name} = {r} must lie in [0, 1]")))
    }
}

/// Bound on `E(𝕃(ĝ_k̂) − 𝕃(g*))` from the two Bernstein sides:
/// `(1 + c)(𝕃(ĝ_k̃) − 𝕃(g*)) + T₋ + T₊ + c 𝕃(g*)` with `c = 2a/(1 − a²)`.
///
/// Subtracting `𝕃(ĝ_k̃) − 𝕃(g*)` from both sides gives the form relative to
/// `k̃`: `T₋ + T₊ + c 𝕃(ĝ_k̃)`.
pub fn oracle_gap_bernstein(
    n: usize,
    m: usize,
    a: f64,
    t_mix: f64,
    gamma: f64,
    risk_tilde: f64,
    risk_star: f64,
) -> Result<f64> {
    check_risk("risk_tilde", risk_tilde)?;
    check_risk("risk_star", risk_star)?;
    let c = 2.0 * a / (1.0 - a * a);
    let under = expectation_bound_bernstein(n, m, a, t_mix, gamma, Side::Under)?;
    let over = expectation_bound_bernstein(n, m, a, t_mix, gamma, Side::Over)?;
    Ok((1.0 + c) * (risk_tilde - risk_star) + under + over + c * risk_star)
}

/// Noise-condition tail on the last `m − b` losses:
/// `N exp(−θγ(m−b)ε / ((1+θ)(16(1+1/γ) m τ* + 80θ))) + 2 exp(−b ln2 / t_mix)`.
#[allow(clippy::too_many_arguments)]
pub fn nc_gap_tail(
    n: usize,
    m: usize,
    b: usize,
    eps: f64,
    theta: f64,
    gamma: f64,
    t_mix: f64,
    tau_star: f64,
) -> Result<f64> {
    check_count(n)?;
    check_gap(m, b)?;
    check_epsilon(eps)?;
    check_open_unit("theta", theta)?;
    check_gamma(gamma)?;
    check_positive("t_mix", t_mix)?;
    check_positive("tau_star", tau_star)?;
    let mf = m as f64;
    let exponent = theta * gamma * (m - b) as f64 * eps / ((1.0 + theta) * noise_constant(mf, theta, gamma, tau_star));
    Ok(((n as f64).ln() - exponent).exp() + coupling_term(b, t_mix))
}

/// `(N + 2 e^{ln2/t_mix}) exp(−θγ m ε / (4 t_mix (1+θ)(16(1+1/γ) m τ* + 80θ)))`.
pub fn nc_tail(n: usize, m: usize, eps: f64, theta: f64, gamma: f64, t_mix: f64, tau_star: f64) -> Result<f64> {
    check_count(n)?;
    check_gap(m, 0)?;
    check_epsilon(eps)?;
    check_open_unit("theta", theta)?;
    check_gamma(gamma)?;
    check_positive("t_mix", t_mix)?;
    check_positive("tau_star", tau_star)?;
    let mf = m as f64;
    let exponent =
        theta * gamma * mf * eps / (4.0 * t_mix * (1.0 + theta) * noise_constant(mf, theta, gamma, tau_star));
    let prefactor = n as f64 + 2.0 * (LN_2 / t_mix).exp();
    Ok((prefactor.ln() - exponent).exp())
}

/// `ln(e (2 e^{ln2/t_mix} + N))`.
fn noise_log(n: usize, t_mix: f64) -> f64 {
    1.0 + (2.0 * (LN_2 / t_mix).exp() + n as f64).ln()
}

/// Bound on `E(𝕃(ĝ_k̂) − 𝕃(g*))` under a noise condition with critical
/// radius `τ*`.
pub fn nc_oracle_rhs(
    n: usize,
    m: usize,
    theta: f64,
    gamma: f64,
    t_mix: f64,
    tau_star: f64,
    excess_tilde: f64,
) -> Result<f64> {
    check_count(n)?;
    check_gap(m, 0)?;
    check_open_unit("theta", theta)?;
    check_gamma(gamma)?;
    check_positive("t_mix", t_mix)?;
    check_positive("tau_star", tau_star)?;
    check_risk("excess_tilde", excess_tilde)?;
    let mf = m as f64;
    let variance = 4.0 * t_mix * noise_constant(mf, theta, gamma, tau_star) / (theta * gamma * mf);
    Ok((1.0 + theta) * (excess_tilde + variance * noise_log(n, t_mix)))
}

/// [`nc_oracle_rhs`] written out for `ω(r) = (r/h)^{α/2}`.
#[allow(clippy::too_many_arguments)]
pub fn mt_oracle_rhs(
    n: usize,
    m: usize,
    theta: f64,
    gamma: f64,
    t_mix: f64,
    alpha: f64,
    h: f64,
    excess_tilde: f64,
) -> Result<f64> {
    check_count(n)?;
    check_gap(m, 0)?;
    check_open_unit("theta", theta)?;
    check_gamma(gamma)?;
    check_positive("t_mix", t_mix)?;
    check_risk("excess_tilde", excess_tilde)?;
    super::noise::check_mt(alpha, h)?;
    let mf = m as f64;
    let exponent = 1.0 / (2.0 - alpha);
    let fast = 320.0 * t_mix / (gamma * mf);
    let noise = 4.0 * t_mix * 16.0 * (1.0 + 1.0 / gamma) * h.powf(-alpha * exponent) / (theta * gamma * mf.powf(exponent));
    Ok((1.0 + theta) * (excess_tilde + (fast + noise) * noise_log(n, t_mix)))
}
