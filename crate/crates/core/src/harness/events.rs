use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::config::Family;
use super::run::ReplicationRecord;
use crate::bounds::Bound;
use crate::{Error, Result};

/// Two-sided standard normal quantile at 99%.
pub const WILSON_Z99: f64 = 2.575_829_303_548_900_4;

/// A deviation event evaluated on each replication. `k` is a zero-based
/// candidate index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventId {
    /// `|L̂_m(g_k) − 𝕃(g_k)| > ε`.
    HoeffdingDeviation { k: usize },
    /// `𝕃(g_k̂) − L̂_m(g_k̂) > ε`.
    HoeffdingSelected,
    /// `L̂_m(g_k̃) − 𝕃(g_k̃) > ε`.
    HoeffdingOracleIndex,
    /// `|L̂_m(g_k) − 𝕃(g_k)| > ε + b/m`.
    HoeffdingGap { k: usize },
    /// `L̂_m(g_k)/(1+a) − 𝕃(g_k) > ε`.
    BernsteinOver { k: usize },
    /// `𝕃(g_k) − L̂_m(g_k)/(1−a) > ε`.
    BernsteinUnder { k: usize },
    /// `𝕃(g_k̂) − L̂_m(g_k̂)/(1−a) > ε`.
    BernsteinSelected,
    /// `L̂_m(g_k̃)/(1+a) − 𝕃(g_k̃) > ε`.
    BernsteinOracleIndex,
    /// `L̂_m(g_k)/(1+a) − 𝕃(g_k) > ε + b/m`.
    BernsteinGapOver { k: usize },
    /// `𝕃(g_k) − L̂_m(g_k)/(1−a) > ε + b/m`.
    BernsteinGapUnder { k: usize },
    /// `(𝕃(g_k̂) − 𝕃*) − (1+θ)(𝕃(g_k̃) − 𝕃*) > ε`.
    NoiseExcess,
    /// The same event at level `ε + (1+θ) 2b/m`.
    NoiseGap,
}

impl EventId {
    /// Every event of a family for `n` candidates; gap events only when
    /// `gap > 0`.
    pub fn family(family: Family, n: usize, gap: usize) -> Vec<EventId> {
        use EventId::*;
        let mut out = Vec::new();
        match family {
            Family::Hoeffding => {
                out.extend((0..n).map(|k| HoeffdingDeviation { k }));
                out.extend([HoeffdingSelected, HoeffdingOracleIndex]);
                if gap > 0 {
                    out.extend((0..n).map(|k| HoeffdingGap { k }));
                }
            }
            Family::Bernstein => {
                for k in 0..n {
                    out.extend([BernsteinOver { k }, BernsteinUnder { k }]);
                }
                out.extend([BernsteinSelected, BernsteinOracleIndex]);
                if gap > 0 {
                    for k in 0..n {
                        out.extend([BernsteinGapOver { k }, BernsteinGapUnder { k }]);
                    }
                }
            }
            Family::Noise => {
                out.push(NoiseExcess);
                if gap > 0 {
                    out.push(NoiseGap);
                }
            }
        }
        out
    }

    pub fn candidate(self) -> Option<usize> {
        use EventId::*;
        match self {
            HoeffdingDeviation { k }
            | HoeffdingGap { k }
            | BernsteinOver { k }
            | BernsteinUnder { k }
            | BernsteinGapOver { k }
            | BernsteinGapUnder { k } => Some(k),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        use EventId::*;
        match self {
            HoeffdingDeviation { .. } => "hoeffding_deviation",
            HoeffdingSelected => "hoeffding_selected",
            HoeffdingOracleIndex => "hoeffding_oracle_index",
            HoeffdingGap { .. } => "hoeffding_gap",
            BernsteinOver { .. } => "bernstein_over",
            BernsteinUnder { .. } => "bernstein_under",
            BernsteinSelected => "bernstein_selected",
            BernsteinOracleIndex => "bernstein_oracle_index",
            BernsteinGapOver { .. } => "bernstein_gap_over",
            BernsteinGapUnder { .. } => "bernstein_gap_under",
            NoiseExcess => "noise_excess",
            NoiseGap => "noise_gap",
        }
    }

    /// The evaluator bounding this event and the union-bound multiplier
    /// applied to it.
    pub fn bound(self, candidates: usize) -> (Bound, usize) {
        use EventId::*;
        match self {
            HoeffdingDeviation { .. } => (Bound::Hoeffding, 1),
            HoeffdingSelected | HoeffdingOracleIndex => (Bound::Hoeffding, candidates),
            HoeffdingGap { .. } => (Bound::HoeffdingShifted, 1),
            BernsteinOver { .. } => (Bound::BernsteinOver, 1),
            BernsteinUnder { .. } => (Bound::BernsteinUnder, 1),
            BernsteinSelected => (Bound::BernsteinUnder, candidates),
            BernsteinOracleIndex => (Bound::BernsteinOver, candidates),
            BernsteinGapOver { .. } => (Bound::BernsteinGapOver, 1),
            BernsteinGapUnder { .. } => (Bound::BernsteinGapUnder, 1),
            NoiseExcess => (Bound::NoiseTail, 1),
            NoiseGap => (Bound::NoiseGap, 1),
        }
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.candidate() {
            Some(k) => write!(f, "{}[{k}]", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

impl FromStr for EventId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use EventId::*;
        let unknown = || Error::UnknownEvent(s.to_string());
        let (name, k) = match s.split_once('[') {
            Some((name, rest)) => {
                let k = rest.strip_suffix(']').and_then(|k| k.parse().ok()).ok_or_else(unknown)?;
                (name, Some(k))
            }
            None => (s, None),
        };
        let event = match (name, k) {
            ("hoeffding_deviation", Some(k)) => HoeffdingDeviation { k },
            ("hoeffding_selected", None) => HoeffdingSelected,
            ("hoeffding_oracle_index", None) => HoeffdingOracleIndex,
            ("hoeffding_gap", Some(k)) => HoeffdingGap { k },
            ("bernstein_over", Some(k)) => BernsteinOver { k },
            ("bernstein_under", Some(k)) => BernsteinUnder { k },
            ("bernstein_selected", None) => BernsteinSelected,
            ("bernstein_oracle_index", None) => BernsteinOracleIndex,
            ("bernstein_gap_over", Some(k)) => BernsteinGapOver { k },
            ("bernstein_gap_under", Some(k)) => BernsteinGapUnder { k },
            ("noise_excess", None) => NoiseExcess,
            ("noise_gap", None) => NoiseGap,
            _ => return Err(unknown()),
        };
        Ok(event)
    }
}

impl Serialize for EventId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EventId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Constants the event definitions depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventParams {
    pub m: usize,
    pub gap: usize,
    pub a: f64,
    pub theta: f64,
}

impl EventParams {
    /// Whether `event` occurs at level `eps` in `record`.
    pub fn fires(&self, event: EventId, record: &ReplicationRecord, eps: f64) -> Result<bool> {
        use EventId::*;
        let n = record.candidates();
        if event.candidate().is_some_and(|k| k >= n) {
            return Err(Error::UnknownEvent(format!("{event} with {n} candidates")));
        }
        let emp = &record.empirical;
        let exact = &record.exact;
        let (over, under) = (1.0 + self.a, 1.0 - self.a);
        let shift = self.gap as f64 / self.m as f64;
        let (kh, kt) = (record.k_hat, record.k_tilde);
        Ok(match event {
            HoeffdingDeviation { k } => (emp[k] - exact[k]).abs() > eps,
            HoeffdingSelected => exact[kh] - emp[kh] > eps,
            HoeffdingOracleIndex => emp[kt] - exact[kt] > eps,
            HoeffdingGap { k } => (emp[k] - exact[k]).abs() > eps + shift,
            BernsteinOver { k } => emp[k] / over - exact[k] > eps,
            BernsteinUnder { k } => exact[k] - emp[k] / under > eps,
            BernsteinSelected => exact[kh] - emp[kh] / under > eps,
            BernsteinOracleIndex => emp[kt] / over - exact[kt] > eps,
            BernsteinGapOver { k } => emp[k] / over - exact[k] > eps + shift,
            BernsteinGapUnder { k } => exact[k] - emp[k] / under > eps + shift,
            NoiseExcess => record.excess_hat - (1.0 + self.theta) * record.excess_tilde > eps,
            NoiseGap => {
                record.excess_hat - (1.0 + self.theta) * record.excess_tilde > eps + (1.0 + self.theta) * 2.0 * shift
            }
        })
    }
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    let r = trials as f64;
    let p = successes as f64 / r;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * r);
    let spread = z * (p * (1.0 - p) / r + z2 / (4.0 * r * r)).sqrt();
    let denom = 1.0 + z2 / r;
    (((centre - spread) / denom).max(0.0), ((centre + spread) / denom).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub event: EventId,
    pub epsilon: f64,
    pub successes: usize,
    pub replications: usize,
    pub frequency: f64,
    pub wilson_lower: f64,
    pub wilson_upper: f64,
}

/// Event frequencies over the records at every `ε`, with 99% Wilson
/// intervals.
pub fn tail_probability(
    records: &[ReplicationRecord],
    event: EventId,
    epsilons: &[f64],
    params: &EventParams,
) -> Result<Vec<TailEstimate>> {
    let r = records.len();
    if r < super::config::MIN_REPLICATIONS {
        return Err(Error::Range(format!(
            "tail estimates need at least {} replications, got {r}",
            super::config::MIN_REPLICATIONS
        )));
    }
    epsilons
        .iter()
        .map(|&eps| {
            let mut successes = 0;
            for rec in records {
                successes += usize::from(params.fires(event, rec, eps)?);
            }
            let (lo, hi) = wilson_interval(successes, r, WILSON_Z99);
            Ok(TailEstimate {
                event,
                epsilon: eps,
                successes,
                replications: r,
                frequency: successes as f64 / r as f64,
                wilson_lower: lo,
                wilson_upper: hi,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "dominated")]
    Dominated,
    #[serde(rename = "vacuous-bound")]
    VacuousBound,
    #[serde(rename = "VIOLATION")]
    Violation,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Dominated => "dominated",
            Verdict::VacuousBound => "vacuous-bound",
            Verdict::Violation => "VIOLATION",
        })
    }
}

/// A bound value for one `(event, ε)` key, after the union-bound
/// multiplier and any test scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventBound {
    pub event: EventId,
    pub epsilon: f64,
    pub bound: Bound,
    pub multiplier: usize,
    pub raw: f64,
}

impl EventBound {
    pub fn clamped(&self) -> f64 {
        self.raw.min(1.0)
    }

    pub fn vacuous(&self) -> bool {
        self.raw >= 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    #[serde(flatten)]
    pub estimate: TailEstimate,
    pub bound: Bound,
    pub multiplier: usize,
    pub bound_raw: f64,
    pub bound_clamped: f64,
    pub verdict: Verdict,
}

pub fn verdict(wilson_upper: f64, bound: &EventBound) -> Verdict {
    if bound.vacuous() {
        Verdict::VacuousBound
    } else if wilson_upper > bound.clamped() {
        Verdict::Violation
    } else {
        Verdict::Dominated
    }
}

/// Pairs each estimate with the bound for the same `(event, ε)`.
pub fn verify_bounds(estimates: &[TailEstimate], bounds: &[EventBound]) -> Result<Vec<TailCheck>> {
    estimates
        .iter()
        .map(|est| {
            let b = bounds
                .iter()
                .find(|b| b.event == est.event && b.epsilon.to_bits() == est.epsilon.to_bits())
                .ok_or_else(|| Error::KeyMismatch(format!("no bound for {} at epsilon {}", est.event, est.epsilon)))?;
            Ok(TailCheck {
                estimate: est.clone(),
                bound: b.bound,
                multiplier: b.multiplier,
                bound_raw: b.raw,
                bound_clamped: b.clamped(),
                verdict: verdict(est.wilson_upper, b),
            })
        })
        .collect()
}
