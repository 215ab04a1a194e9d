use std::collections::BTreeSet;
use std::io::Write;

use serde::Serialize;

use super::checks::{
    coupling_check, noise_condition_check, oracle_gap_check, CouplingReport, NoiseConditionReport, OracleGapKind,
    OracleGapReport, OracleParams, MAX_ENUMERATED_ORDER,
};
use super::config::{Family, Mode};
use super::events::{tail_probability, verify_bounds, EventBound, EventId, EventParams, TailCheck, Verdict};
use super::run::{Experiment, LearningSummary, Replications};
use crate::bounds::{evaluate, BoundQuery, NoiseModel};
use crate::Result;

/// Formats a double with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSummary {
    pub symbols: usize,
    pub base_order: usize,
    pub embedding_order: usize,
    pub composite_states: usize,
    pub t_mix: usize,
    pub gamma_ps: f64,
    pub bayes_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSummary {
    pub model: NoiseModel,
    pub tau_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionSummary {
    /// Fraction of replications selecting each candidate.
    pub k_hat_frequency: Vec<f64>,
    /// Fraction of replications where `k̂ = k̃`.
    pub oracle_agreement: f64,
    pub tie_break: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub mode: Mode,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub gap: usize,
    pub replications: usize,
    pub candidate_orders: Vec<usize>,
    pub chain: ChainSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning: Option<LearningSummary>,
    pub selection: SelectionSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSummary>,
    pub tails: Vec<TailCheck>,
    pub oracle_gaps: Vec<OracleGapReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingReport>,
    pub noise_condition: Vec<NoiseConditionReport>,
    /// Tail violations plus failed exact and oracle checks.
    pub violations: usize,
    pub pass: bool,
}

impl VerificationReport {
    pub fn tail_violations(&self) -> usize {
        self.tails.iter().filter(|t| t.verdict == Verdict::Violation).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per `(event, ε)`.
    pub fn write_tail_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "event",
            "epsilon",
            "successes",
            "replications",
            "frequency",
            "wilson_upper",
            "bound",
            "multiplier",
            "bound_raw",
            "bound_clamped",
            "verdict",
        ])
        .map_err(csv_error)?;
        for t in &self.tails {
            let e = &t.estimate;
            w.write_record([
                e.event.to_string(),
                fmt17(e.epsilon),
                e.successes.to_string(),
                e.replications.to_string(),
                fmt17(e.frequency),
                fmt17(e.wilson_upper),
                t.bound.to_string(),
                t.multiplier.to_string(),
                fmt17(t.bound_raw),
                fmt17(t.bound_clamped),
                t.verdict.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_error(e: csv::Error) -> crate::Error {
    crate::Error::Io(std::io::Error::other(e))
}

impl Experiment {
    fn event_params(&self) -> EventParams {
        let c = &self.config;
        EventParams { m: c.m, gap: c.gap, a: c.a, theta: c.theta }
    }

    fn base_query(&self) -> BoundQuery {
        let c = &self.config;
        BoundQuery {
            b: c.gap,
            delta: c.delta,
            a: c.a,
            theta: c.theta,
            candidates: self.candidates(),
            ..BoundQuery::with_diagnostics(c.m, &self.diagnostics)
        }
    }

    /// The bound for every `(event, ε)`, scaled by the configured factor.
    pub fn event_bounds(&self, events: &[EventId], tau_star: Option<f64>) -> Result<Vec<EventBound>> {
        let mut out = Vec::with_capacity(events.len() * self.config.epsilons.len());
        for &event in events {
            let (bound, multiplier) = event.bound(self.candidates());
            for &eps in &self.config.epsilons {
                let q = BoundQuery { epsilon: eps, tau_star, ..self.base_query() };
                let report = evaluate(bound, &q)?;
                out.push(EventBound {
                    event,
                    epsilon: eps,
                    bound,
                    multiplier,
                    raw: report.raw * multiplier as f64 * self.config.bound_scale,
                });
            }
        }
        Ok(out)
    }

    fn noise_summary(&self) -> Result<Option<NoiseSummary>> {
        let c = &self.config;
        let wanted = c.checks.tails.contains(&Family::Noise) || c.checks.oracle_gaps;
        if !wanted {
            return Ok(None);
        }
        let model = self.noise_model()?;
        let tau_star = model.tau_star(c.m)?;
        Ok(Some(NoiseSummary { model, tau_star }))
    }

    /// Runs the replications and every configured check.
    pub fn verify(&self) -> Result<VerificationReport> {
        let run = self.run_replications()?;
        self.verify_replications(&run)
    }

    pub fn verify_replications(&self, run: &Replications) -> Result<VerificationReport> {
        let c = &self.config;
        let records = &run.records;
        let n_cand = self.candidates();
        let noise = self.noise_summary()?;
        let tau_star = noise.as_ref().map(|n| n.tau_star);
        let params = self.event_params();

        let families: BTreeSet<Family> = c.checks.tails.iter().copied().collect();
        let events: Vec<EventId> = families.into_iter().flat_map(|f| EventId::family(f, n_cand, c.gap)).collect();
        let mut estimates = Vec::new();
        for &event in &events {
            estimates.extend(tail_probability(records, event, &c.epsilons, &params)?);
        }
        let bounds = self.event_bounds(&events, tau_star)?;
        let tails = verify_bounds(&estimates, &bounds)?;

        let mut oracle_gaps = Vec::new();
        if c.checks.oracle_gaps {
            let p = OracleParams {
                m: c.m,
                t_mix: self.t_mix(),
                gamma_ps: self.gamma_ps(),
                a: c.a,
                theta: c.theta,
                tau_star,
                bayes_risk: self.bayes_risk,
                scale: c.bound_scale,
            };
            for kind in [OracleGapKind::Hoeffding, OracleGapKind::Bernstein, OracleGapKind::Noise] {
                oracle_gaps.push(oracle_gap_check(records, kind, &p)?);
            }
        }

        let coupling = if c.checks.coupling {
            Some(coupling_check(&self.chain, &self.bayes, &self.loss, self.t_mix(), c.checks.coupling_horizon)?)
        } else {
            None
        };

        let mut noise_condition = Vec::new();
        if c.checks.noise_condition {
            let orders: BTreeSet<usize> = c.candidates.iter().copied().filter(|&q| q <= MAX_ENUMERATED_ORDER).collect();
            for q in orders {
                noise_condition.push(noise_condition_check(&self.chain, q)?);
            }
        }

        let r = records.len() as f64;
        let mut k_hat_counts = vec![0usize; n_cand];
        for rec in records {
            k_hat_counts[rec.k_hat] += 1;
        }
        let k_hat_frequency = k_hat_counts.iter().map(|&c| c as f64 / r).collect();
        let oracle_agreement = records.iter().filter(|rec| rec.k_hat == rec.k_tilde).count() as f64 / r;

        let failed_checks = oracle_gaps.iter().filter(|g| !g.pass).count()
            + usize::from(coupling.as_ref().is_some_and(|c| !c.pass))
            + noise_condition.iter().filter(|n| !n.pass).count();
        let violations = tails.iter().filter(|t| t.verdict == Verdict::Violation).count() + failed_checks;

        let d = &self.diagnostics;
        Ok(VerificationReport {
            mode: c.mode,
            seed: c.seed,
            n: c.n,
            m: c.m,
            gap: c.gap,
            replications: records.len(),
            candidate_orders: c.candidates.clone(),
            chain: ChainSummary {
                symbols: self.chain.symbols(),
                base_order: self.chain.base.order,
                embedding_order: self.chain.embedding_order,
                composite_states: self.chain.size(),
                t_mix: d.t_mix(),
                gamma_ps: d.gamma_ps(),
                bayes_risk: self.bayes_risk,
            },
            learning: run.learning.clone(),
            selection: SelectionSummary { k_hat_frequency, oracle_agreement, tie_break: "lowest index" },
            noise,
            tails,
            oracle_gaps,
            coupling,
            noise_condition,
            violations,
            pass: violations == 0,
        })
    }
}
