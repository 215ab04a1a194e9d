//! Command-line driver: chain diagnostics, bound tables, noise radii and
//! Monte Carlo verification runs, each configured by one JSON document.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use holdout_core::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use commands::{CommandOutput, Status};

#[derive(Debug, Parser)]
#[command(name = "holdout", version, about = "Hold-out model selection on finite Markov chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for output files and the run manifest. Without it the main
    /// output goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true, env = "HOLDOUT_SEED")]
    pub seed: Option<u64>,
    /// Worker threads for the replications.
    #[arg(long, global = true, env = "HOLDOUT_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Stationary law, mixing profile, certificate and pseudo-spectral gap.
    Diagnose,
    /// Bound table as CSV.
    Bounds,
    /// Replications of the hold-out protocol as CSV.
    Simulate,
    /// Replications plus every configured check; exits 1 on a violation.
    Verify,
    /// Noise modulus, critical radii and the exhaustive noise-condition check.
    Noise,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Diagnose => "diagnose",
            Command::Bounds => "bounds",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Noise => "noise",
        }
    }
}

/// Records what a run read and wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: PathBuf,
    /// The configuration as resolved, including command-line overrides.
    pub config: Value,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub outputs: Vec<PathBuf>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Runs one subcommand on configuration text.
pub fn execute(command: Command, text: &str, seed: Option<u64>) -> Result<CommandOutput> {
    match command {
        Command::Diagnose => commands::diagnose(text),
        Command::Bounds => commands::bounds(text),
        Command::Simulate => commands::simulate(text, seed),
        Command::Verify => commands::verify(text, seed),
        Command::Noise => commands::noise(text),
    }
}

fn write_outputs(cli: &Cli, config_path: &Path, output: &CommandOutput) -> Result<()> {
    let Some(dir) = &cli.out else {
        let mut stdout = std::io::stdout().lock();
        for a in output.artifacts.iter().filter(|a| a.primary) {
            stdout.write_all(&a.bytes)?;
        }
        return Ok(());
    };
    std::fs::create_dir_all(dir)?;
    let mut outputs = Vec::new();
    for a in &output.artifacts {
        let path = dir.join(a.name);
        std::fs::write(&path, &a.bytes)?;
        outputs.push(path);
    }
    let manifest = RunManifest {
        command: cli.command.name().into(),
        config_path: config_path.to_path_buf(),
        config: output.echo.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        outputs,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    std::fs::write(dir.join(MANIFEST_NAME), bytes)?;
    eprintln!("holdout: wrote {}", dir.display());
    Ok(())
}

/// Runs the parsed command line and returns its status.
pub fn run(cli: &Cli) -> Result<Status> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    let text = config::read(path)?;
    let output = match cli.threads {
        Some(0) => return Err(Error::Config("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| execute(cli.command, &text, cli.seed)),
        None => execute(cli.command, &text, cli.seed),
    }
    .map_err(|e| match e {
        Error::Json(e) => Error::Config(format!("{}: {e}", path.display())),
        other => other,
    })?;
    write_outputs(cli, path, &output)?;
    Ok(output.status)
}

/// Parses arguments, runs, and maps the outcome to the exit code
/// (0 pass, 1 violation, 2 error).
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(status) => status.exit_code(),
        Err(e) => {
            eprintln!("holdout: error: {e}");
            2
        }
    }
}
