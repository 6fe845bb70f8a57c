//! Experiment runner: configuration, orchestration, result files and figures.

pub mod config;
pub mod experiments;
pub mod output;
pub mod svg;

use std::path::{Path, PathBuf};

use config::ExperimentConfig;
use output::{unix_now, OutputDir};

pub const ENV_OUTPUT_DIR: &str = "ACG_OUTPUT_DIR";
pub const ENV_WORKERS: &str = "ACG_WORKERS";

#[derive(Debug)]
pub enum Failure {
    Config(Vec<String>),
    Numeric(String),
    Io(String),
    Acceptance(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) | Failure::Io(_) => 3,
            Failure::Acceptance(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(v) => {
                write!(f, "configuration error:")?;
                for m in v {
                    write!(f, "\n  - {m}")?;
                }
                Ok(())
            }
            Failure::Numeric(m) => write!(f, "numerical failure: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
            Failure::Acceptance(m) => write!(f, "acceptance failure: {m}"),
        }
    }
}

impl From<acg_core::Error> for Failure {
    fn from(e: acg_core::Error) -> Self {
        match e {
            acg_core::Error::Constraint(v) => Failure::Config(v),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<config::ConfigError> for Failure {
    fn from(e: config::ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

/// Output directory: the environment variable wins over the config value.
pub fn resolve_output_dir(cfg: &ExperimentConfig) -> PathBuf {
    std::env::var_os(ENV_OUTPUT_DIR).map_or_else(|| PathBuf::from(&cfg.output_dir), PathBuf::from)
}

/// Worker count: the environment variable wins over the config value; 0
/// means one per core.
pub fn resolve_workers(cfg: &ExperimentConfig) -> Result<usize, Failure> {
    match std::env::var(ENV_WORKERS) {
        Ok(v) => v.trim().parse().map_err(|_| Failure::Config(vec![format!("{ENV_WORKERS}: not a worker count: {v:?}")])),
        Err(_) => Ok(cfg.workers),
    }
}

/// Runs the experiment in `dir` on a pool of `workers` threads and writes the
/// manifest last. Files written before a failure stay and the manifest is
/// marked FAILED.
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path, workers: usize) -> Result<PathBuf, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::Numeric(format!("worker pool: {e}")))?;
    let started = unix_now();
    let text = cfg.to_text();
    let mut out = OutputDir::create(dir)?;
    out.seed("master", cfg.seed);
    let result = out
        .write_bytes("config.toml", text.as_bytes())
        .map_err(Failure::from)
        .and_then(|_| pool.install(|| experiments::run(cfg, &mut out)));
    out.finish(cfg.kind.name(), &text, started, result.as_ref().err().map(ToString::to_string))?;
    result.map(|_| dir.join(output::MANIFEST))
}
