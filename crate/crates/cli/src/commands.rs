use holdout_core::bounds::{evaluate, margin, Bound, BoundQuery, Margin, NoiseModel, TAU_BRACKET};
use holdout_core::chain::{
    diagnose_with_stationary, markovize, stationary_distribution, ChainDiagnostics, ChainInput, DiagnoseOptions,
    MixingOptions, SpectralDiagnostics, TransitionKernel, Certificate,
};
use holdout_core::harness::{fmt17, noise_condition_check, Experiment, NoiseConditionReport, MAX_ENUMERATED_ORDER};
use holdout_core::{Error, Result};
use serde::Serialize;
use serde_json::Value;

use crate::config::{load_experiment, parse, BoundsConfig, DiagnoseConfig, NoiseConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Violation,
    /// Some rows could not be evaluated; the rest were written.
    Failed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Violation => 1,
            Status::Failed => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: &'static str,
    pub bytes: Vec<u8>,
    /// Printed to stdout when no output directory is given.
    pub primary: bool,
}

#[derive(Debug, Clone)]
pub struct CommandOutput {
    /// The configuration as resolved, for the manifest.
    pub echo: Value,
    pub artifacts: Vec<Artifact>,
    pub status: Status,
}

fn json_artifact<T: Serialize>(name: &'static str, value: &T, primary: bool) -> Result<Artifact> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(Artifact { name, bytes, primary })
}

fn log(stage: &str) {
    eprintln!("holdout: {stage}");
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnoseReport {
    pub symbols: usize,
    pub chain_order: usize,
    /// Window of the composite chain diagnosed; absent for a base kernel.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding_order: Option<usize>,
    pub states: usize,
    pub stationary: Vec<f64>,
    pub d_values: Vec<f64>,
    pub t_mix: usize,
    pub certificate: Certificate,
    pub gamma_ps: f64,
    pub spectral: SpectralDiagnostics,
    /// `min |2η − 1|` over contexts, for binary chains.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

/// Diagnoses the chain itself for a kernel, the composite chain otherwise.
pub fn chain_diagnostics(
    chain: &ChainInput,
    embedding_order: Option<usize>,
    options: DiagnoseOptions,
) -> Result<(ChainDiagnostics, Option<usize>)> {
    let spec = chain.to_spec()?;
    match (chain.kernel.as_ref(), embedding_order) {
        (Some(rows), None) => {
            let kernel = TransitionKernel::new(rows)?;
            let q = stationary_distribution(&kernel)?;
            Ok((diagnose_with_stationary(&kernel, q, options)?, None))
        }
        _ => {
            let p = embedding_order.unwrap_or(spec.order);
            let composite = markovize(&spec, p)?;
            Ok((diagnose_with_stationary(&composite.kernel, composite.stationary.clone(), options)?, Some(p)))
        }
    }
}

fn binary_margin(chain: &ChainInput) -> Result<Option<Margin>> {
    let spec = chain.to_spec()?;
    if spec.symbols.size() != 2 {
        return Ok(None);
    }
    Ok(Some(margin(&markovize(&spec, spec.order)?)?))
}

pub fn diagnose(text: &str) -> Result<CommandOutput> {
    let config = DiagnoseConfig::from_json(text)?;
    log("diagnosing chain");
    let options = DiagnoseOptions {
        mixing: MixingOptions { horizon: config.horizon, ..MixingOptions::default() },
        ..DiagnoseOptions::default()
    };
    let (diag, embedding_order) = chain_diagnostics(&config.chain, config.embedding_order, options)?;
    let spec = config.chain.to_spec()?;
    let report = DiagnoseReport {
        symbols: spec.symbols.size(),
        chain_order: spec.order,
        embedding_order,
        states: diag.stationary.len(),
        stationary: diag.stationary.as_slice().to_vec(),
        d_values: diag.mixing.d_values.clone(),
        t_mix: diag.t_mix(),
        certificate: diag.mixing.certificate(),
        gamma_ps: diag.gamma_ps(),
        spectral: diag.spectral.clone(),
        margin: binary_margin(&config.chain)?.map(|m| m.h),
    };
    Ok(CommandOutput {
        echo: serde_json::to_value(&config)?,
        artifacts: vec![json_artifact("diagnostics.json", &report, true)?],
        status: Status::Pass,
    })
}

pub const BOUND_COLUMNS: [&str; 15] = [
    "theorem_id", "m", "b", "epsilon", "delta", "a", "theta", "N", "t_mix", "gamma_ps", "tau_star", "raw", "clamped",
    "vacuous", "error",
];

/// Every `(bound, m, ε, δ)` combination of the configuration.
pub fn bound_queries(config: &BoundsConfig) -> Result<Vec<(Bound, BoundQuery)>> {
    let mut fields = config.query.clone();
    if let Some(chain) = &config.chain {
        let (diag, _) = chain_diagnostics(chain, config.embedding_order, DiagnoseOptions::default())?;
        fields.insert("t_mix".into(), Value::from(diag.t_mix() as f64));
        fields.insert("gamma_ps".into(), Value::from(diag.gamma_ps()));
    }
    let base: BoundQuery =
        serde_json::from_value(Value::Object(fields)).map_err(|e| Error::Config(format!("query: {e}")))?;
    let or_base = |axis: &[f64], v: f64| if axis.is_empty() { vec![v] } else { axis.to_vec() };
    let ms = if config.grid.m.is_empty() { vec![base.m] } else { config.grid.m.clone() };
    let epsilons = or_base(&config.grid.epsilon, base.epsilon);
    let deltas = or_base(&config.grid.delta, base.delta);
    let mut out = Vec::new();
    for &bound in &config.bounds {
        for &m in &ms {
            for &epsilon in &epsilons {
                for &delta in &deltas {
                    out.push((bound, BoundQuery { m, epsilon, delta, ..base.clone() }));
                }
            }
        }
    }
    Ok(out)
}

pub fn bounds(text: &str) -> Result<CommandOutput> {
    let config: BoundsConfig = parse(text)?;
    let queries = bound_queries(&config)?;
    log(&format!("evaluating {} bound rows", queries.len()));
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(BOUND_COLUMNS).map_err(csv_err)?;
    let mut failed = 0;
    for (bound, q) in &queries {
        let mut row = vec![
            bound.id().to_string(),
            q.m.to_string(),
            q.b.to_string(),
            fmt17(q.epsilon),
            fmt17(q.delta),
            fmt17(q.a),
            fmt17(q.theta),
            q.candidates.to_string(),
            fmt17(q.t_mix),
            fmt17(q.gamma_ps),
        ];
        match evaluate(*bound, q) {
            Ok(r) => row.extend([
                r.tau_star.map(fmt17).unwrap_or_default(),
                fmt17(r.raw),
                fmt17(r.clamped),
                r.vacuous.to_string(),
                String::new(),
            ]),
            Err(e) => {
                failed += 1;
                eprintln!("holdout: {bound} at m = {}, epsilon = {}: {e}", q.m, q.epsilon);
                row.extend([String::new(), String::new(), String::new(), String::new(), e.to_string()]);
            }
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(CommandOutput {
        echo: serde_json::to_value(&config)?,
        artifacts: vec![Artifact { name: "bounds.csv", bytes, primary: true }],
        status: if failed == 0 { Status::Pass } else { Status::Failed },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauRow {
    pub m: usize,
    pub tau_star: f64,
    /// Bisection on `ω(τ) = √m τ`, reported beside the closed form.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_star_bisection: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseReport {
    pub model: NoiseModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<Margin>,
    pub tau_star: Vec<TauRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub omega: Vec<(f64, f64)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub noise_condition: Vec<NoiseConditionReport>,
    pub pass: bool,
}

pub fn noise(text: &str) -> Result<CommandOutput> {
    let config: NoiseConfig = parse(text)?;
    let composite = match &config.chain {
        Some(chain) => {
            let spec = chain.to_spec()?;
            Some(markovize(&spec, config.embedding_order.unwrap_or(spec.order))?)
        }
        None => None,
    };
    let chain_margin = composite.as_ref().map(margin).transpose()?;
    let model = match (&config.model, chain_margin) {
        (Some(model), _) => {
            model.validate()?;
            model.clone()
        }
        (None, Some(m)) if m.zero_margin => return Err(Error::ZeroMargin { h: m.h }),
        (None, Some(m)) => NoiseModel::mammen_tsybakov(1.0, m.h)?,
        (None, None) => return Err(Error::Config("noise needs a \"model\" or a binary \"chain\"".into())),
    };
    log("solving critical radii");
    let tau_star = config
        .m
        .iter()
        .map(|&m| {
            let bisection = match model {
                NoiseModel::MammenTsybakov { .. } => Some(model.solve_tau(m, TAU_BRACKET.0, TAU_BRACKET.1)?),
                NoiseModel::Tabulated { .. } => None,
            };
            Ok(TauRow { m, tau_star: model.tau_star(m)?, tau_star_bisection: bisection })
        })
        .collect::<Result<Vec<_>>>()?;
    let omega = config.omega_at.iter().map(|&x| Ok((x, model.omega(x)?))).collect::<Result<Vec<_>>>()?;
    let mut noise_condition = Vec::new();
    if let (Some(chain), Some(m)) = (&composite, chain_margin) {
        if !m.zero_margin {
            log("checking the noise condition exhaustively");
            for q in 0..=chain.embedding_order.min(MAX_ENUMERATED_ORDER) {
                noise_condition.push(noise_condition_check(chain, q)?);
            }
        }
    }
    let pass = noise_condition.iter().all(|r| r.pass);
    let report = NoiseReport { model, margin: chain_margin, tau_star, omega, noise_condition, pass };
    Ok(CommandOutput {
        echo: serde_json::to_value(&config)?,
        artifacts: vec![json_artifact("noise.json", &report, true)?],
        status: if pass { Status::Pass } else { Status::Violation },
    })
}

pub fn simulate(text: &str, seed: Option<u64>) -> Result<CommandOutput> {
    let config = load_experiment(text, seed)?;
    let echo = serde_json::to_value(&config)?;
    let experiment = Experiment::from_config(config)?;
    log(&format!("running {} replications", experiment.config.replications));
    let run = experiment.run_replications()?;
    let n = experiment.candidates();
    let mut header = vec!["index".to_string(), "k_hat".into(), "k_tilde".into(), "excess_hat".into(), "excess_tilde".into()];
    header.extend((0..n).map(|k| format!("empirical_{k}")));
    header.extend((0..n).map(|k| format!("exact_{k}")));
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(&header).map_err(csv_err)?;
    for r in &run.records {
        let mut row = vec![
            r.index.to_string(),
            r.k_hat.to_string(),
            r.k_tilde.to_string(),
            fmt17(r.excess_hat),
            fmt17(r.excess_tilde),
        ];
        row.extend(r.empirical.iter().map(|&v| fmt17(v)));
        row.extend(r.exact.iter().map(|&v| fmt17(v)));
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    let mut artifacts = vec![Artifact { name: "replications.csv", bytes, primary: true }];
    if let Some(learning) = &run.learning {
        artifacts.push(json_artifact("learning.json", learning, false)?);
    }
    Ok(CommandOutput { echo, artifacts, status: Status::Pass })
}

pub fn verify(text: &str, seed: Option<u64>) -> Result<CommandOutput> {
    let config = load_experiment(text, seed)?;
    let echo = serde_json::to_value(&config)?;
    let experiment = Experiment::from_config(config)?;
    log(&format!(
        "verifying with {} replications, t_mix = {}, gamma_ps = {}",
        experiment.config.replications,
        experiment.t_mix(),
        experiment.gamma_ps()
    ));
    let report = experiment.verify()?;
    log(&format!("{} violations", report.violations));
    let mut tails = Vec::new();
    report.write_tail_csv(&mut tails)?;
    Ok(CommandOutput {
        echo,
        artifacts: vec![
            json_artifact("report.json", &report, true)?,
            Artifact { name: "tails.csv", bytes: tails, primary: false },
        ],
        status: if report.pass { Status::Pass } else { Status::Violation },
    })
}
