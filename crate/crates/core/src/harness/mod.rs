//! Replicated Monte Carlo runs of the hold-out protocol and the checks that
//! compare observed frequencies and mean gaps with the bound evaluators.

mod checks;
mod config;
mod events;
mod report;
mod run;

pub use checks::{
    coupling_check, noise_condition_check, oracle_gap_check, CouplingReport, CouplingRow, NoiseConditionReport,
    NoiseConditionRow, OracleGapKind, OracleGapReport, OracleParams, EXACT_SLACK, MAX_ENUMERATED_ORDER,
};
pub use config::{Checks, ExperimentConfig, Family, Mode, NoiseConfig, MIN_REPLICATIONS};
pub use events::{
    tail_probability, verdict, verify_bounds, wilson_interval, EventBound, EventId, EventParams, TailCheck,
    TailEstimate, Verdict, WILSON_Z99,
};
pub use report::{fmt17, ChainSummary, NoiseSummary, SelectionSummary, VerificationReport};
pub use run::{Experiment, LearningSummary, ReplicationRecord, Replications};
