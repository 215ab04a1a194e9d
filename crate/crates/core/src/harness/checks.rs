use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::run::ReplicationRecord;
use crate::bounds::{margin, oracle_gap_bernstein, oracle_gap_hoeffding, nc_oracle_rhs, NoiseModel};
use crate::chain::MarkovizedChain;
use crate::predictors::{bayes_predictor, disagreement_variance, exact_risk, state_losses, LossSpec, PredictorTable};
use crate::{Error, Result};

/// Slack for comparisons between two exactly computed quantities.
pub const EXACT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleGapKind {
    /// `E(𝕃(ĝ_k̂) − 𝕃(ĝ_k̃))` against twice the Hoeffding expectation bound.
    Hoeffding,
    /// `E(𝕃(ĝ_k̂) − 𝕃(g*))` against the two-sided Bernstein form.
    Bernstein,
    /// `E(𝕃(ĝ_k̂) − 𝕃(g*))` against the noise-condition oracle bound.
    Noise,
}

/// Parameters of the oracle right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleParams {
    pub m: usize,
    pub t_mix: f64,
    pub gamma_ps: f64,
    pub a: f64,
    pub theta: f64,
    pub tau_star: Option<f64>,
    pub bayes_risk: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleGapReport {
    pub kind: OracleGapKind,
    pub replications: usize,
    pub mean: f64,
    pub standard_error: f64,
    /// `mean + 3 · standard_error`.
    pub upper: f64,
    pub rhs: f64,
    /// The right-hand side is at least 1, the largest possible gap.
    pub vacuous: bool,
    pub pass: bool,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Mean gap plus three standard errors against the matching right-hand
/// side, evaluated with exact diagnostics.
pub fn oracle_gap_check(records: &[ReplicationRecord], kind: OracleGapKind, p: &OracleParams) -> Result<OracleGapReport> {
    if records.is_empty() {
        return Err(Error::Range("no replications to average".into()));
    }
    let n = records[0].candidates();
    let values: Vec<f64> = match kind {
        OracleGapKind::Hoeffding => records.iter().map(|r| r.exact[r.k_hat] - r.exact[r.k_tilde]).collect(),
        OracleGapKind::Bernstein | OracleGapKind::Noise => records.iter().map(|r| r.excess_hat).collect(),
    };
    let (mean, se) = mean_and_se(&values);
    let count = records.len() as f64;
    let rhs = match kind {
        OracleGapKind::Hoeffding => oracle_gap_hoeffding(n, p.m, p.t_mix)?,
        OracleGapKind::Bernstein => {
            let risk_tilde = records.iter().map(|r| r.exact[r.k_tilde]).sum::<f64>() / count;
            oracle_gap_bernstein(n, p.m, p.a, p.t_mix, p.gamma_ps, risk_tilde.min(1.0), p.bayes_risk)?
        }
        OracleGapKind::Noise => {
            let tau = p.tau_star.ok_or_else(|| Error::Config("the noise oracle check needs tau_star".into()))?;
            let excess_tilde = records.iter().map(|r| r.excess_tilde).sum::<f64>() / count;
            nc_oracle_rhs(n, p.m, p.theta, p.gamma_ps, p.t_mix, tau, excess_tilde.clamp(0.0, 1.0))?
        }
    } * p.scale;
    let upper = mean + 3.0 * se;
    Ok(OracleGapReport {
        kind,
        replications: records.len(),
        mean,
        standard_error: se,
        upper,
        rhs,
        vacuous: rhs >= 1.0,
        pass: upper <= rhs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingRow {
    pub b: usize,
    /// `max_x |𝕃_b(g) − 𝕃(g)|`.
    pub deviation: f64,
    /// `2 exp(−b ln2 / t_mix)`.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub rows: Vec<CouplingRow>,
    pub pass: bool,
}

/// Exact distance between the loss `b + 1` steps after any start and the
/// stationary loss, for `b = 0..=horizon`.
pub fn coupling_check(
    chain: &MarkovizedChain,
    g: &PredictorTable,
    loss: &LossSpec,
    t_mix: f64,
    horizon: usize,
) -> Result<CouplingReport> {
    let losses = state_losses(g, chain, loss)?;
    let stationary = exact_risk(g, chain, loss)?;
    let k = chain.kernel.matrix();
    let mut v = k * nalgebra::DVector::from_vec(losses);
    let mut rows = Vec::with_capacity(horizon + 1);
    for b in 0..=horizon {
        let deviation = v.iter().map(|x| (x - stationary).abs()).fold(0.0, f64::max);
        let bound = 2.0 * (-(b as f64) * LN_2 / t_mix).exp();
        rows.push(CouplingRow { b, deviation, bound, pass: deviation <= bound + EXACT_SLACK });
        v = k * v;
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(CouplingReport { rows, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConditionRow {
    pub table: BTreeMap<String, usize>,
    pub excess: f64,
    /// `√Var(𝟙{g ≠ g*})`.
    pub lhs: f64,
    /// `ω(𝕃(g) − 𝕃(g*))`.
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConditionReport {
    pub order: usize,
    pub h: f64,
    pub rows: Vec<NoiseConditionRow>,
    pub pass: bool,
}

pub const MAX_ENUMERATED_ORDER: usize = 3;

/// Checks `√Var(𝟙{g ≠ g*}) ≤ ω(𝕃(g) − 𝕃(g*))` for every table of order `q`,
/// with `ω` the `α = 1` model at the chain's margin.
pub fn noise_condition_check(chain: &MarkovizedChain, order: usize) -> Result<NoiseConditionReport> {
    let m = margin(chain)?;
    if m.zero_margin {
        return Err(Error::ZeroMargin { h: m.h });
    }
    if order > MAX_ENUMERATED_ORDER || order > chain.embedding_order {
        return Err(Error::InvalidOrder(format!(
            "noise check enumerates orders up to min({MAX_ENUMERATED_ORDER}, {}), got {order}",
            chain.embedding_order
        )));
    }
    let loss = LossSpec::misclassification(2);
    let omega = NoiseModel::mammen_tsybakov(1.0, m.h)?;
    let g_star = bayes_predictor(chain, &loss)?;
    let risk_star = exact_risk(&g_star, chain, &loss)?;
    let rows = PredictorTable::enumerate(order, 2)
        .map(|g| {
            let excess = (exact_risk(&g, chain, &loss)? - risk_star).max(0.0);
            let lhs = disagreement_variance(&g, &g_star, chain)?.sqrt();
            let rhs = omega.omega(excess)?;
            Ok(NoiseConditionRow { table: g.to_map(), excess, lhs, rhs, pass: lhs <= rhs + EXACT_SLACK })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = rows.iter().all(|r| r.pass);
    Ok(NoiseConditionReport { order, h: m.h, rows, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{markovize, HigherOrderChainSpec, TransitionKernel};

    fn chain_from(rows: &[Vec<f64>]) -> MarkovizedChain {
        let k = TransitionKernel::new(rows).unwrap();
        markovize(&HigherOrderChainSpec::from_kernel(&k), 1).unwrap()
    }

    fn record(exact: Vec<f64>, k_hat: usize, k_tilde: usize, star: f64) -> ReplicationRecord {
        ReplicationRecord {
            index: 0,
            k_hat,
            k_tilde,
            excess_hat: exact[k_hat] - star,
            excess_tilde: exact[k_tilde] - star,
            empirical: exact.clone(),
            empirical_gap: exact.clone(),
            exact,
        }
    }

    fn params() -> OracleParams {
        OracleParams {
            m: 500,
            t_mix: 4.0,
            gamma_ps: 0.255,
            a: 0.5,
            theta: 0.5,
            tau_star: Some(1.0 / 300.0),
            bayes_risk: 0.1,
            scale: 1.0,
        }
    }

    #[test]
    fn equal_candidates_have_zero_gap() {
        let recs: Vec<_> = (0..100).map(|_| record(vec![0.2, 0.2], 1, 0, 0.1)).collect();
        let r = oracle_gap_check(&recs, OracleGapKind::Hoeffding, &params()).unwrap();
        assert_eq!(r.mean, 0.0);
        assert_eq!(r.standard_error, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn gap_statistics() {
        let recs: Vec<_> = (0..100).map(|i| record(vec![0.3, 0.2], usize::from(i % 2 == 0), 1, 0.2)).collect();
        let r = oracle_gap_check(&recs, OracleGapKind::Noise, &params()).unwrap();
        assert!((r.mean - 0.05).abs() < 1e-12);
        // 50 values of 0.1 and 50 of 0: sample variance 0.25/99
        assert!((r.standard_error - (0.25f64 / 99.0).sqrt() / 10.0).abs() < 1e-12);
        let scaled = oracle_gap_check(&recs, OracleGapKind::Noise, &OracleParams { scale: 1e-6, ..params() }).unwrap();
        assert!(!scaled.pass);
    }

    #[test]
    fn coupling_on_reference_chains() {
        let miss = LossSpec::misclassification(2);
        let chain = chain_from(&[vec![0.9, 0.1], vec![0.2, 0.8]]);
        let g = bayes_predictor(&chain, &miss).unwrap();
        let report = coupling_check(&chain, &g, &miss, 3.0, 20).unwrap();
        assert!(report.pass && report.rows.len() == 21);

        let long = coupling_check(&chain, &g, &miss, 3.0, 200).unwrap();
        assert!(long.rows[60].deviation < 1e-6);
        assert!(long.rows[200].deviation < 1e-10);

        let iid = chain_from(&[vec![0.3, 0.7], vec![0.3, 0.7]]);
        let g = PredictorTable::constant(2, 1).unwrap();
        let report = coupling_check(&iid, &g, &miss, 1.0, 10).unwrap();
        assert!(report.rows.iter().all(|r| r.deviation < 1e-15));
    }

    #[test]
    fn noise_condition_on_two_state_chain() {
        let chain = chain_from(&[vec![0.9, 0.1], vec![0.2, 0.8]]);
        let report = noise_condition_check(&chain, 1).unwrap();
        assert_eq!(report.rows.len(), 4);
        assert!((report.h - 0.6).abs() < 1e-12);
        assert!(report.pass);
        let bayes = report.rows.iter().find(|r| r.table["0"] == 0 && r.table["1"] == 1).unwrap();
        assert!(bayes.lhs == 0.0 && bayes.rhs == 0.0);

        let flat = chain_from(&[vec![0.5, 0.5], vec![0.2, 0.8]]);
        assert!(matches!(noise_condition_check(&flat, 1), Err(Error::ZeroMargin { .. })));
        assert!(matches!(noise_condition_check(&chain, 2), Err(Error::InvalidOrder(_))));
    }
}
