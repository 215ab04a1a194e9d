//! Closed-form tail, deviation and oracle bounds for hold-out selection on
//! uniformly ergodic chains, plus noise models and the critical radius.

mod noise;
mod tails;

use serde::{Deserialize, Serialize};

pub use noise::{margin, Margin, NoiseModel, TAU_BRACKET, TAU_TOLERANCE, ZERO_MARGIN_TOL};
pub use tails::{
    bernstein_deviation_radius, bernstein_gap_tail, bernstein_tail, bernstein_tail_raw,
    expectation_bound_bernstein, expectation_bound_hoeffding, hoeffding_gap_tail, hoeffding_tail,
    mt_oracle_rhs, nc_gap_tail, nc_oracle_rhs, nc_tail, oracle_gap_bernstein, oracle_gap_hoeffding, Side,
    DIVISION_GUARD,
};

use crate::chain::ChainDiagnostics;
use crate::{Error, Result};

/// Every evaluator, by identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    HoeffdingGap,
    HoeffdingShifted,
    Hoeffding,
    HoeffdingExpectation,
    HoeffdingOracle,
    BernsteinRaw,
    BernsteinRadius,
    BernsteinGapOver,
    BernsteinGapUnder,
    BernsteinOver,
    BernsteinUnder,
    BernsteinExpectationOver,
    BernsteinExpectationUnder,
    BernsteinOracle,
    NoiseGap,
    NoiseTail,
    NoiseOracle,
    MtOracle,
}

impl Bound {
    pub const ALL: [Bound; 18] = [
        Bound::HoeffdingGap,
        Bound::HoeffdingShifted,
        Bound::Hoeffding,
        Bound::HoeffdingExpectation,
        Bound::HoeffdingOracle,
        Bound::BernsteinRaw,
        Bound::BernsteinRadius,
        Bound::BernsteinGapOver,
        Bound::BernsteinGapUnder,
        Bound::BernsteinOver,
        Bound::BernsteinUnder,
        Bound::BernsteinExpectationOver,
        Bound::BernsteinExpectationUnder,
        Bound::BernsteinOracle,
        Bound::NoiseGap,
        Bound::NoiseTail,
        Bound::NoiseOracle,
        Bound::MtOracle,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Bound::HoeffdingGap => "hoeffding_gap",
            Bound::HoeffdingShifted => "hoeffding_shifted",
            Bound::Hoeffding => "hoeffding",
            Bound::HoeffdingExpectation => "hoeffding_expectation",
            Bound::HoeffdingOracle => "hoeffding_oracle",
            Bound::BernsteinRaw => "bernstein_raw",
            Bound::BernsteinRadius => "bernstein_radius",
            Bound::BernsteinGapOver => "bernstein_gap_over",
            Bound::BernsteinGapUnder => "bernstein_gap_under",
            Bound::BernsteinOver => "bernstein_over",
            Bound::BernsteinUnder => "bernstein_under",
            Bound::BernsteinExpectationOver => "bernstein_expectation_over",
            Bound::BernsteinExpectationUnder => "bernstein_expectation_under",
            Bound::BernsteinOracle => "bernstein_oracle",
            Bound::NoiseGap => "noise_gap",
            Bound::NoiseTail => "noise_tail",
            Bound::NoiseOracle => "noise_oracle",
            Bound::MtOracle => "mt_oracle",
        }
    }

    /// True for bounds on a probability; the rest bound an expectation or a
    /// deviation radius.
    pub fn is_tail(self) -> bool {
        matches!(
            self,
            Bound::HoeffdingGap
                | Bound::HoeffdingShifted
                | Bound::Hoeffding
                | Bound::BernsteinRaw
                | Bound::BernsteinGapOver
                | Bound::BernsteinGapUnder
                | Bound::BernsteinOver
                | Bound::BernsteinUnder
                | Bound::NoiseGap
                | Bound::NoiseTail
        )
    }
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

impl std::str::FromStr for Bound {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Bound::ALL
            .into_iter()
            .find(|b| b.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown bound id {s:?}")))
    }
}

fn default_delta() -> f64 {
    0.1
}
fn default_half() -> f64 {
    0.5
}
fn default_one() -> usize {
    1
}
fn default_centering() -> f64 {
    1.0
}
fn default_variance() -> f64 {
    0.25
}

/// Inputs shared by all evaluators. Fields an evaluator does not use are
/// ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundQuery {
    /// Validation length (the sum length for the raw Bernstein forms).
    pub m: usize,
    #[serde(default)]
    pub b: usize,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_half")]
    pub a: f64,
    #[serde(default = "default_half")]
    pub theta: f64,
    /// Candidate count `N`.
    #[serde(default = "default_one")]
    pub candidates: usize,
    pub t_mix: f64,
    #[serde(default = "default_half")]
    pub gamma_ps: f64,
    /// Variance proxy `V`.
    #[serde(default = "default_variance")]
    pub variance: f64,
    /// Centering bound `B`.
    #[serde(default = "default_centering")]
    pub centering: f64,
    /// Critical radius; computed from `noise` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseModel>,
    /// `𝕃(ĝ_k̃) − 𝕃(g*)`.
    #[serde(default)]
    pub excess_tilde: f64,
    /// `𝕃(ĝ_k̃)`.
    #[serde(default)]
    pub risk_tilde: f64,
    /// `𝕃(g*)`.
    #[serde(default)]
    pub risk_star: f64,
}

impl BoundQuery {
    pub fn new(m: usize, t_mix: f64) -> Self {
        Self {
            m,
            b: 0,
            epsilon: 0.0,
            delta: default_delta(),
            a: default_half(),
            theta: default_half(),
            candidates: 1,
            t_mix,
            gamma_ps: default_half(),
            variance: default_variance(),
            centering: default_centering(),
            tau_star: None,
            noise: None,
            excess_tilde: 0.0,
            risk_tilde: 0.0,
            risk_star: 0.0,
        }
    }

    pub fn with_diagnostics(m: usize, diagnostics: &ChainDiagnostics) -> Self {
        Self { gamma_ps: diagnostics.gamma_ps(), ..Self::new(m, diagnostics.t_mix() as f64) }
    }

    pub fn resolved_tau_star(&self) -> Result<f64> {
        match (self.tau_star, &self.noise) {
            (Some(t), _) => Ok(t),
            (None, Some(model)) => model.tau_star(self.m),
            (None, None) => Err(Error::Config("noise bounds need tau_star or a noise model".into())),
        }
    }

    fn mt_parameters(&self) -> Result<(f64, f64)> {
        match &self.noise {
            Some(NoiseModel::MammenTsybakov { alpha, h }) => Ok((*alpha, *h)),
            _ => Err(Error::Config("mt_oracle needs a mammen_tsybakov noise model".into())),
        }
    }
}

/// Event shift `numerator / denominator`, kept exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shift {
    pub numerator: usize,
    pub denominator: usize,
}

impl Shift {
    pub fn value(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound: Bound,
    pub raw: f64,
    /// `min(raw, cap)`, the value used in domination checks.
    pub clamped: f64,
    /// `raw ≥ cap`: the bound says nothing here.
    pub vacuous: bool,
    /// Deviation level the bound controls, for tail bounds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_threshold: Option<f64>,
    /// Extra deviation added to `ε` by a gap of `b` observations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<Shift>,
    pub tau_star: Option<f64>,
    pub query: BoundQuery,
}

impl BoundReport {
    /// The trivial ceiling: 1 for probabilities and expected risk gaps, `m B`
    /// for the deviation radius of a sum of `m` terms.
    pub fn cap(bound: Bound, query: &BoundQuery) -> f64 {
        match bound {
            Bound::BernsteinRadius => query.m as f64 * query.centering,
            _ => 1.0,
        }
    }
}

pub fn evaluate(bound: Bound, q: &BoundQuery) -> Result<BoundReport> {
    let m = q.m;
    let mut threshold = bound.is_tail().then_some(q.epsilon);
    let mut shift = None;
    let mut tau = None;
    let raw = match bound {
        Bound::HoeffdingGap => hoeffding_gap_tail(m, q.b, q.epsilon, q.t_mix)?,
        Bound::HoeffdingShifted => {
            let v = hoeffding_gap_tail(m, q.b, q.epsilon, q.t_mix)?;
            let s = Shift { numerator: q.b, denominator: m };
            threshold = Some(q.epsilon + s.value());
            shift = Some(s);
            v
        }
        Bound::Hoeffding => hoeffding_tail(m, q.epsilon, q.t_mix)?,
        Bound::HoeffdingExpectation => expectation_bound_hoeffding(q.candidates, m, q.t_mix)?,
        Bound::HoeffdingOracle => oracle_gap_hoeffding(q.candidates, m, q.t_mix)?,
        Bound::BernsteinRaw => bernstein_tail_raw(m, q.epsilon, q.gamma_ps, q.variance, q.centering)?,
        Bound::BernsteinRadius => bernstein_deviation_radius(m, q.delta, q.gamma_ps, q.variance, q.centering)?,
        Bound::BernsteinGapOver | Bound::BernsteinGapUnder => {
            let side = if bound == Bound::BernsteinGapOver { Side::Over } else { Side::Under };
            let s = Shift { numerator: q.b, denominator: m };
            threshold = Some(q.epsilon + s.value());
            shift = Some(s);
            bernstein_gap_tail(m, q.b, q.epsilon, q.a, q.gamma_ps, q.t_mix, side)?
        }
        Bound::BernsteinOver => bernstein_tail(m, q.epsilon, q.a, q.gamma_ps, q.t_mix, Side::Over)?,
        Bound::BernsteinUnder => bernstein_tail(m, q.epsilon, q.a, q.gamma_ps, q.t_mix, Side::Under)?,
        Bound::BernsteinExpectationOver => {
            expectation_bound_bernstein(q.candidates, m, q.a, q.t_mix, q.gamma_ps, Side::Over)?
        }
        Bound::BernsteinExpectationUnder => {
            expectation_bound_bernstein(q.candidates, m, q.a, q.t_mix, q.gamma_ps, Side::Under)?
        }
        Bound::BernsteinOracle => {
            oracle_gap_bernstein(q.candidates, m, q.a, q.t_mix, q.gamma_ps, q.risk_tilde, q.risk_star)?
        }
        Bound::NoiseGap => {
            let t = q.resolved_tau_star()?;
            tau = Some(t);
            let s = Shift { numerator: 2 * q.b, denominator: m };
            threshold = Some(q.epsilon + (1.0 + q.theta) * s.value());
            shift = Some(s);
            nc_gap_tail(q.candidates, m, q.b, q.epsilon, q.theta, q.gamma_ps, q.t_mix, t)?
        }
        Bound::NoiseTail => {
            let t = q.resolved_tau_star()?;
            tau = Some(t);
            nc_tail(q.candidates, m, q.epsilon, q.theta, q.gamma_ps, q.t_mix, t)?
        }
        Bound::NoiseOracle => {
            let t = q.resolved_tau_star()?;
            tau = Some(t);
            nc_oracle_rhs(q.candidates, m, q.theta, q.gamma_ps, q.t_mix, t, q.excess_tilde)?
        }
        Bound::MtOracle => {
            let (alpha, h) = q.mt_parameters()?;
            tau = Some(NoiseModel::MammenTsybakov { alpha, h }.tau_star(m)?);
            mt_oracle_rhs(q.candidates, m, q.theta, q.gamma_ps, q.t_mix, alpha, h, q.excess_tilde)?
        }
    };
    let cap = BoundReport::cap(bound, q);
    Ok(BoundReport {
        bound,
        raw,
        clamped: raw.min(cap),
        vacuous: raw >= cap,
        event_threshold: threshold,
        shift,
        tau_star: tau,
        query: q.clone(),
    })
}
