//! Losses, risks, and the hold-out / oracle selection rules.
//!
//! Candidate indices are zero-based throughout.

mod loss;
mod risk;
mod table;

use serde::{Deserialize, Serialize};

pub use loss::{LossKind, LossSpec};
pub use risk::{
    bayes_predictor, conditional_risk, disagreement_variance, empirical_risk, erm_fit, exact_risk,
    loss_variance,
};
pub use table::PredictorTable;
pub(crate) use risk::state_losses;

use crate::chain::MarkovizedChain;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub exact_risk: f64,
    pub empirical_risk: f64,
    /// `𝕃(g) − 𝕃(g*)`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub index: usize,
    /// The criterion value of every candidate.
    pub values: Vec<f64>,
}

fn argmin_first(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) })
        .0
}

/// `k̂ = argmin_k L̂_m(g_k)` over the validation segment; ties go to the
/// lowest index.
pub fn holdout_select(candidates: &[PredictorTable], validation: &[usize], loss: &LossSpec) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::Config("no candidates to select from".into()));
    }
    let values = candidates
        .iter()
        .map(|g| empirical_risk(g, validation, loss, 0))
        .collect::<Result<Vec<_>>>()?;
    Ok(Selection { index: argmin_first(&values), values })
}

/// `k̃ = argmin_k 𝕃(g_k)`; ties go to the lowest index.
pub fn oracle_select(candidates: &[PredictorTable], chain: &MarkovizedChain, loss: &LossSpec) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::Config("no candidates to select from".into()));
    }
    let values = candidates.iter().map(|g| exact_risk(g, chain, loss)).collect::<Result<Vec<_>>>()?;
    Ok(Selection { index: argmin_first(&values), values })
}

/// Exact, empirical and excess risk of one candidate.
pub fn risk_report(
    g: &PredictorTable,
    chain: &MarkovizedChain,
    validation: &[usize],
    loss: &LossSpec,
    bayes_risk: f64,
) -> Result<RiskReport> {
    let exact = exact_risk(g, chain, loss)?;
    Ok(RiskReport {
        exact_risk: exact,
        empirical_risk: empirical_risk(g, validation, loss, 0)?,
        excess: exact - bayes_risk,
    })
}
