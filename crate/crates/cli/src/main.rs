use std::path::PathBuf;
use std::process::ExitCode;

use acg_cli::config::{parse_with_overrides, Kind};
use acg_cli::{resolve_output_dir, resolve_workers, run_experiment, Failure};
use clap::{Args, Parser, Subcommand};

/// Used when a subcommand is given no config file.
const BASE_CONFIG: &str = "potential = \"quartic\"\nepsilon = 0.2\ngamma = 0.3\n";

#[derive(Parser)]
#[command(name = "acg", version, about = "Experiments on the invariant measure of the 1-d stochastic Allen-Cahn equation")]
struct Cli {
    /// Output directory (overrides ACG_OUTPUT_DIR and the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (overrides ACG_WORKERS and the config; 0 = one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Config file; without one a quartic, ε = 0.2, γ = 0.3 default is used.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set chain.n_steps=50000 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Clone, Default)]
struct SpdeFlags {
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Interior grid nodes on [−1, 1] (odd).
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Noise on or off.
    #[arg(long, value_parser = ["on", "off"])]
    noise: Option<String>,
    /// Steps between written snapshots (0 = final state only).
    #[arg(long)]
    snapshot_stride: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file (its `kind` key).
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Instanton profile and surface tension.
    Instanton(Common),
    /// Spectrum of the linearized operator around the instanton.
    Spectrum(Common),
    /// Brownian-bridge reference samples and tail bounds.
    SampleBridge(Common),
    /// Gibbs chain for the discretized measure.
    SampleGibbs(Common),
    /// Log-normalizer by stepping-stone along a temperature ladder.
    Logz(Common),
    /// Deviation probabilities from the instanton manifold.
    Rates(Common),
    /// Interface-position statistics.
    Interface(Common),
    /// Stochastic Allen-Cahn trajectory.
    Spde {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flags: SpdeFlags,
    },
    /// Acceptance checks (`verify.criteria`); exit 4 if any fails.
    Verify(Common),
}

fn split_pairs(set: &[String]) -> Result<Vec<(String, String)>, Failure> {
    set.iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Failure::Config(vec![format!("--set {s:?}: expected KEY=VALUE")]))
        })
        .collect()
}

fn spde_pairs(f: &SpdeFlags) -> Vec<(String, String)> {
    let mut v = Vec::new();
    let mut push = |k: &str, val: Option<String>| {
        if let Some(val) = val {
            v.push((k.to_string(), val));
        }
    };
    push("epsilon", f.epsilon.map(|x| format!("{x:?}")));
    push("gamma", f.gamma.map(|x| format!("{x:?}")));
    push("spde.n_x", f.nx.map(|x| x.to_string()));
    push("spde.dt", f.dt.map(|x| format!("{x:?}")));
    push("spde.t_end", f.t_end.map(|x| format!("{x:?}")));
    push("seed", f.seed.map(|x| x.to_string()));
    push("spde.noise", f.noise.as_ref().map(|n| (n == "on").to_string()));
    push("spde.snapshot_every", f.snapshot_stride.map(|x| x.to_string()));
    v
}

fn execute(cli: Cli) -> Result<PathBuf, Failure> {
    let (kind, config, set, extra) = match cli.command {
        Command::Run { config, set } => (None, Some(config), set, Vec::new()),
        Command::Instanton(c) => (Some(Kind::Instanton), c.config, c.set, Vec::new()),
        Command::Spectrum(c) => (Some(Kind::Spectrum), c.config, c.set, Vec::new()),
        Command::SampleBridge(c) => (Some(Kind::SampleBridge), c.config, c.set, Vec::new()),
        Command::SampleGibbs(c) => (Some(Kind::SampleGibbs), c.config, c.set, Vec::new()),
        Command::Logz(c) => (Some(Kind::Logz), c.config, c.set, Vec::new()),
        Command::Rates(c) => (Some(Kind::Rates), c.config, c.set, Vec::new()),
        Command::Interface(c) => (Some(Kind::Interface), c.config, c.set, Vec::new()),
        Command::Spde { common, flags } => (Some(Kind::Spde), common.config, common.set, spde_pairs(&flags)),
        Command::Verify(c) => (Some(Kind::Verify), c.config, c.set, Vec::new()),
    };
    let text = match &config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Failure::Config(vec![format!("{}: {e}", p.display())]))?,
        None => BASE_CONFIG.to_string(),
    };
    let mut pairs = Vec::new();
    if let Some(k) = kind {
        pairs.push(("kind".to_string(), k.name().to_string()));
    }
    pairs.extend(extra);
    pairs.extend(split_pairs(&set)?);
    let cfg = parse_with_overrides(&text, &pairs)?;
    let dir = cli.out.unwrap_or_else(|| resolve_output_dir(&cfg));
    let workers = match cli.workers {
        Some(w) => w,
        None => resolve_workers(&cfg)?,
    };
    run_experiment(&cfg, &dir, workers)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(manifest) => {
            println!("wrote {}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("acg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
