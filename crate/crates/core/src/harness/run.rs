use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Mode, NoiseConfig};
use crate::bounds::{margin, Margin, NoiseModel};
use crate::chain::{diagnose_with_stationary, markovize, ChainDiagnostics, DiagnoseOptions, MarkovizedChain};
use crate::predictors::{
    bayes_predictor, empirical_risk, erm_fit, exact_risk, holdout_select, oracle_select, LossSpec, PredictorTable,
};
use crate::sampling::{Sampler, SeedSpec};
use crate::{Error, Result};

/// An experiment with its chain built and diagnosed.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub chain: MarkovizedChain,
    /// Diagnostics of the composite chain, which is the process the bounds
    /// are stated for.
    pub diagnostics: ChainDiagnostics,
    pub loss: LossSpec,
    pub training_loss: LossSpec,
    pub bayes: PredictorTable,
    pub bayes_risk: f64,
}

/// One hold-out run. Candidate indices are zero-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub index: usize,
    pub k_hat: usize,
    pub k_tilde: usize,
    /// `L̂_m` of every candidate over the whole validation block.
    pub empirical: Vec<f64>,
    /// The same over the last `m − b` validation states.
    pub empirical_gap: Vec<f64>,
    /// `𝕃` of every candidate.
    pub exact: Vec<f64>,
    /// `𝕃(ĝ_k̂) − 𝕃(g*)`.
    pub excess_hat: f64,
    /// `𝕃(ĝ_k̃) − 𝕃(g*)`.
    pub excess_tilde: f64,
}

impl ReplicationRecord {
    pub fn candidates(&self) -> usize {
        self.exact.len()
    }
}

/// The frozen learning block of a conditional run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearningSummary {
    pub x_n: usize,
    pub x_n_symbols: Vec<usize>,
    pub tables: Vec<PredictorTable>,
    pub exact: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Replications {
    pub records: Vec<ReplicationRecord>,
    /// Present in conditional mode.
    pub learning: Option<LearningSummary>,
}

impl Experiment {
    pub fn from_config(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let spec = config.chain.to_spec()?;
        let max_candidate = config.candidates.iter().copied().max().unwrap_or(0);
        let p = config.embedding_order.unwrap_or(spec.order.max(max_candidate));
        let chain = markovize(&spec, p)?;
        let diagnostics = diagnose_with_stationary(&chain.kernel, chain.stationary.clone(), DiagnoseOptions::default())?;
        let s = chain.symbols();
        let loss = config.loss.clone().unwrap_or_else(|| LossSpec::misclassification(s));
        loss.validate(s)?;
        let training_loss = config.training_loss.clone().unwrap_or_else(|| loss.clone());
        training_loss.validate(s)?;
        let bayes = bayes_predictor(&chain, &loss)?;
        let bayes_risk = exact_risk(&bayes, &chain, &loss)?;
        Ok(Self { config, chain, diagnostics, loss, training_loss, bayes, bayes_risk })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_config(ExperimentConfig::from_json(text)?)
    }

    pub fn candidates(&self) -> usize {
        self.config.candidates.len()
    }

    pub fn t_mix(&self) -> f64 {
        self.diagnostics.t_mix() as f64
    }

    pub fn gamma_ps(&self) -> f64 {
        self.diagnostics.gamma_ps()
    }

    pub fn margin(&self) -> Result<Margin> {
        margin(&self.chain)
    }

    /// The noise modulus the noise-condition bounds are evaluated with.
    pub fn noise_model(&self) -> Result<NoiseModel> {
        match &self.config.noise {
            NoiseConfig::Margin => {
                let m = self.margin()?;
                if m.zero_margin {
                    return Err(Error::ZeroMargin { h: m.h });
                }
                NoiseModel::mammen_tsybakov(1.0, m.h)
            }
            NoiseConfig::MammenTsybakov { alpha, h } => NoiseModel::mammen_tsybakov(*alpha, *h),
            NoiseConfig::Tabulated { points } => NoiseModel::tabulated(points.clone()),
        }
    }

    pub fn tau_star(&self) -> Result<f64> {
        self.noise_model()?.tau_star(self.config.m)
    }

    fn fit(&self, learning: &[usize]) -> Result<Vec<PredictorTable>> {
        let s = self.chain.symbols();
        self.config.candidates.iter().map(|&q| erm_fit(q, learning, s, &self.training_loss)).collect()
    }

    fn exact_risks(&self, tables: &[PredictorTable]) -> Result<Vec<f64>> {
        tables.iter().map(|g| exact_risk(g, &self.chain, &self.loss)).collect()
    }

    fn record(&self, index: usize, tables: &[PredictorTable], exact: &[f64], validation: &[usize]) -> Result<ReplicationRecord> {
        let selection = holdout_select(tables, validation, &self.loss)?;
        let k_tilde = oracle_select(tables, &self.chain, &self.loss)?.index;
        let empirical_gap = tables
            .iter()
            .map(|g| empirical_risk(g, validation, &self.loss, self.config.gap))
            .collect::<Result<Vec<_>>>()?;
        Ok(ReplicationRecord {
            index,
            k_hat: selection.index,
            k_tilde,
            excess_hat: exact[selection.index] - self.bayes_risk,
            excess_tilde: exact[k_tilde] - self.bayes_risk,
            empirical: selection.values,
            empirical_gap,
            exact: exact.to_vec(),
        })
    }

    /// Runs every replication in parallel; records come back in index order
    /// and depend only on the seed.
    pub fn run_replications(&self) -> Result<Replications> {
        let c = &self.config;
        let sampler = Sampler::new(&self.chain);
        match c.mode {
            Mode::Conditional => {
                let learning = sampler.stationary_trajectory(c.n, c.m, SeedSpec::new(c.seed, 0))?;
                let tables = self.fit(learning.learning())?;
                let exact = self.exact_risks(&tables)?;
                let x_n = learning.last_learning_state();
                let records = (0..c.replications)
                    .into_par_iter()
                    .map(|r| {
                        let validation = sampler.conditional_continuation(x_n, c.m, SeedSpec::new(c.seed, r as u64))?;
                        self.record(r, &tables, &exact, &validation)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let summary =
                    LearningSummary { x_n, x_n_symbols: self.chain.decode_state(x_n), tables, exact };
                Ok(Replications { records, learning: Some(summary) })
            }
            Mode::Marginal => {
                let records = (0..c.replications)
                    .into_par_iter()
                    .map(|r| {
                        let traj = sampler.stationary_trajectory(c.n, c.m, SeedSpec::new(c.seed, r as u64))?;
                        let tables = self.fit(traj.learning())?;
                        let exact = self.exact_risks(&tables)?;
                        self.record(r, &tables, &exact, traj.validation())
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Replications { records, learning: None })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(candidates: &str, mode: &str, replications: usize) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"chain": {{"kernel": [[0.9, 0.1], [0.2, 0.8]]}}, "candidates": {candidates},
                "n": 500, "m": 500, "replications": {replications}, "mode": "{mode}", "seed": 7}}"#
        ))
        .unwrap()
    }

    #[test]
    fn single_candidate_is_always_selected() {
        let e = Experiment::from_config(config("[1]", "conditional", 100)).unwrap();
        let run = e.run_replications().unwrap();
        assert!(run.records.iter().all(|r| r.k_hat == 0 && r.k_tilde == 0));
    }

    #[test]
    fn order_one_wins_on_the_two_state_chain() {
        let e = Experiment::from_config(config("[0, 1]", "conditional", 500)).unwrap();
        assert!((e.bayes_risk - 0.4 / 3.0).abs() < 1e-12);
        let run = e.run_replications().unwrap();
        let learning = run.learning.as_ref().unwrap();
        assert_eq!(learning.tables[1].entries(), &[0, 1]);
        let hits = run.records.iter().filter(|r| r.k_hat == 1).count();
        assert!(hits as f64 / 500.0 > 0.95);
        assert!(run.records.iter().all(|r| r.k_tilde == 1 && r.excess_tilde.abs() < 1e-12));
    }

    #[test]
    fn modes_agree_on_exact_quantities() {
        let cond = Experiment::from_config(config("[0, 1]", "conditional", 100)).unwrap().run_replications().unwrap();
        let marg = Experiment::from_config(config("[0, 1]", "marginal", 100)).unwrap().run_replications().unwrap();
        for r in &marg.records {
            assert_eq!(r.k_tilde, 1);
            assert!((r.exact[1] - cond.records[0].exact[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let e = Experiment::from_config(config("[0, 1]", "marginal", 100)).unwrap();
        assert_eq!(e.run_replications().unwrap(), e.run_replications().unwrap());
    }

    #[test]
    fn margin_noise_model() {
        let e = Experiment::from_config(config("[0, 1]", "conditional", 100)).unwrap();
        match e.noise_model().unwrap() {
            NoiseModel::MammenTsybakov { alpha, h } => assert!(alpha == 1.0 && (h - 0.6).abs() < 1e-12),
            other => panic!("unexpected model {other:?}"),
        }
        assert!((e.tau_star().unwrap() - 1.0 / 300.0).abs() < 1e-12);
    }
}
