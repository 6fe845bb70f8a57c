//! Experiment configuration: `key = value` lines with `[section]` headers
//! (a TOML subset). Unknown keys are rejected and every violation is listed.

use std::fmt::Write as _;
use std::path::Path;

use acg_core::gibbs::ChainConfig;
use acg_core::params::check_exponents;
use acg_core::spde::{SpdeConfig, SpdeScaling};
use acg_core::{PotentialSpec, ScaleParams};
use toml::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Instanton,
    Spectrum,
    SampleBridge,
    SampleGibbs,
    Logz,
    Rates,
    Interface,
    Spde,
    Verify,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::Instanton,
        Kind::Spectrum,
        Kind::SampleBridge,
        Kind::SampleGibbs,
        Kind::Logz,
        Kind::Rates,
        Kind::Interface,
        Kind::Spde,
        Kind::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Instanton => "instanton",
            Kind::Spectrum => "spectrum",
            Kind::SampleBridge => "sample-bridge",
            Kind::SampleGibbs => "sample-gibbs",
            Kind::Logz => "logz",
            Kind::Rates => "rates",
            Kind::Interface => "interface",
            Kind::Spde => "spde",
            Kind::Verify => "verify",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }

    fn needs_scale(self) -> bool {
        !matches!(self, Kind::Instanton | Kind::Spectrum | Kind::Verify)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainBlock {
    pub rho: f64,
    pub n_steps: usize,
    pub burn_in: usize,
    pub adapt: bool,
    pub target_acceptance: f64,
    pub thin: usize,
    pub max_shift: usize,
    pub site_sweeps: usize,
    pub chains: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub potential: String,
    pub epsilon: f64,
    pub gamma: f64,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    /// `None` means `N = ceil(ε^(−γ₂))`.
    pub n: Option<usize>,
    pub output_dir: String,
    pub seed: u64,
    /// 0 uses every available core.
    pub workers: usize,

    pub instanton_tol: f64,
    pub spectrum_h: f64,
    pub spectrum_t_box: f64,

    pub bridge_samples: usize,
    pub bridge_refine_m: usize,
    pub bridge_kappa: f64,

    pub chain: ChainBlock,

    pub ladder_rungs: usize,
    pub ladder_power: f64,
    pub ladder_epsilons: Vec<f64>,

    pub rates_deltas: Vec<f64>,
    pub rates_norms: Vec<String>,
    pub rates_epsilons: Vec<f64>,
    /// Cutoff radius of the potential; 0 disables the cutoff.
    pub rates_cutoff: f64,

    pub interface_epsilons: Vec<f64>,
    pub interface_smear_halfwidth: f64,
    pub interface_trim: f64,
    pub interface_cell_nodes: usize,
    pub interface_cell_halfwidth: f64,

    pub spde_n_x: usize,
    /// 0 selects `h²/4`.
    pub spde_dt: f64,
    pub spde_t_end: f64,
    pub spde_noise: bool,
    pub spde_burn_in: f64,
    pub spde_sample_every: usize,
    pub spde_snapshot_every: usize,
    pub spde_scaling: String,

    pub verify_criteria: Vec<u8>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: Kind::Instanton,
            potential: String::new(),
            epsilon: f64::NAN,
            gamma: f64::NAN,
            gamma1: None,
            gamma2: None,
            n: None,
            output_dir: "out".into(),
            seed: 1,
            workers: 0,
            instanton_tol: 1e-10,
            spectrum_h: 0.01,
            spectrum_t_box: 20.0,
            bridge_samples: 10_000,
            bridge_refine_m: 8,
            bridge_kappa: 1.0,
            chain: ChainBlock {
                rho: 0.9,
                n_steps: 20_000,
                burn_in: 2_000,
                adapt: true,
                target_acceptance: 0.25,
                thin: 1,
                max_shift: 0,
                site_sweeps: 1,
                chains: 1,
            },
            ladder_rungs: 16,
            ladder_power: 2.0,
            ladder_epsilons: Vec::new(),
            rates_deltas: vec![0.25, 0.5, 0.75],
            rates_norms: vec!["l2".into(), "linf".into()],
            rates_epsilons: Vec::new(),
            rates_cutoff: 2.0,
            interface_epsilons: Vec::new(),
            interface_smear_halfwidth: 0.05,
            interface_trim: 0.8,
            interface_cell_nodes: 4,
            interface_cell_halfwidth: 0.5,
            spde_n_x: 63,
            spde_dt: 0.0,
            spde_t_end: 10.0,
            spde_noise: true,
            spde_burn_in: 0.0,
            spde_sample_every: 0,
            spde_snapshot_every: 0,
            spde_scaling: "invariant".into(),
            verify_criteria: acg_core::criteria::QUICK.to_vec(),
        }
    }
}

/// Configuration errors: every problem found, one message each.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub Vec<String>);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0.join("\n"))
    }
}

impl std::error::Error for ConfigError {}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            _ => out.push((key, v.clone())),
        }
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn as_usize(v: &Value) -> Option<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Some(*i as usize),
        _ => None,
    }
}

fn f64_list(v: &Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(as_f64).collect()
}

fn str_list(v: &Value) -> Option<Vec<String>> {
    v.as_array()?.iter().map(|x| x.as_str().map(String::from)).collect()
}

impl ExperimentConfig {
    fn set(&mut self, key: &str, v: &Value) -> Result<(), String> {
        let bad = |what: &str| format!("{key}: expected {what}, got {v}");
        macro_rules! float {
            ($field:expr) => {
                $field = as_f64(v).ok_or_else(|| bad("a number"))?
            };
        }
        macro_rules! count {
            ($field:expr) => {
                $field = as_usize(v).ok_or_else(|| bad("a non-negative integer"))?
            };
        }
        macro_rules! flag {
            ($field:expr) => {
                $field = v.as_bool().ok_or_else(|| bad("true or false"))?
            };
        }
        match key {
            "kind" => {
                let s = v.as_str().ok_or_else(|| bad("a string"))?;
                self.kind = Kind::parse(s).ok_or_else(|| {
                    format!("kind: unknown experiment {s:?} (one of {})", Kind::ALL.map(|k| k.name()).join(", "))
                })?;
            }
            "potential" => self.potential = v.as_str().ok_or_else(|| bad("a string"))?.to_string(),
            "epsilon" => float!(self.epsilon),
            "gamma" => float!(self.gamma),
            "gamma1" => self.gamma1 = Some(as_f64(v).ok_or_else(|| bad("a number"))?),
            "gamma2" => self.gamma2 = Some(as_f64(v).ok_or_else(|| bad("a number"))?),
            "N" => {
                self.n = match v {
                    Value::String(s) if s == "auto" => None,
                    _ => Some(as_usize(v).ok_or_else(|| bad("a positive integer or \"auto\""))?),
                }
            }
            "output_dir" => self.output_dir = v.as_str().ok_or_else(|| bad("a string"))?.to_string(),
            "seed" => self.seed = as_usize(v).ok_or_else(|| bad("a non-negative integer"))? as u64,
            "workers" => count!(self.workers),
            "instanton.tol" => float!(self.instanton_tol),
            "spectrum.h" => float!(self.spectrum_h),
            "spectrum.t_box" => float!(self.spectrum_t_box),
            "bridge.samples" => count!(self.bridge_samples),
            "bridge.refine_m" => count!(self.bridge_refine_m),
            "bridge.kappa" => float!(self.bridge_kappa),
            "chain.rho" => float!(self.chain.rho),
            "chain.n_steps" => count!(self.chain.n_steps),
            "chain.burn_in" => count!(self.chain.burn_in),
            "chain.adapt" => flag!(self.chain.adapt),
            "chain.target_acceptance" => float!(self.chain.target_acceptance),
            "chain.thin" => count!(self.chain.thin),
            "chain.max_shift" => count!(self.chain.max_shift),
            "chain.site_sweeps" => count!(self.chain.site_sweeps),
            "chain.chains" => count!(self.chain.chains),
            "ladder.rungs" => count!(self.ladder_rungs),
            "ladder.power" => float!(self.ladder_power),
            "ladder.epsilons" => self.ladder_epsilons = f64_list(v).ok_or_else(|| bad("an array of numbers"))?,
            "rates.deltas" => self.rates_deltas = f64_list(v).ok_or_else(|| bad("an array of numbers"))?,
            "rates.norms" => self.rates_norms = str_list(v).ok_or_else(|| bad("an array of strings"))?,
            "rates.epsilons" => self.rates_epsilons = f64_list(v).ok_or_else(|| bad("an array of numbers"))?,
            "rates.cutoff" => float!(self.rates_cutoff),
            "interface.epsilons" => self.interface_epsilons = f64_list(v).ok_or_else(|| bad("an array of numbers"))?,
            "interface.smear_halfwidth" => float!(self.interface_smear_halfwidth),
            "interface.trim" => float!(self.interface_trim),
            "interface.cell_nodes" => count!(self.interface_cell_nodes),
            "interface.cell_halfwidth" => float!(self.interface_cell_halfwidth),
            "spde.n_x" => count!(self.spde_n_x),
            "spde.dt" => float!(self.spde_dt),
            "spde.t_end" => float!(self.spde_t_end),
            "spde.noise" => flag!(self.spde_noise),
            "spde.burn_in" => float!(self.spde_burn_in),
            "spde.sample_every" => count!(self.spde_sample_every),
            "spde.snapshot_every" => count!(self.spde_snapshot_every),
            "spde.scaling" => self.spde_scaling = v.as_str().ok_or_else(|| bad("a string"))?.to_string(),
            "verify.criteria" => {
                self.verify_criteria = v
                    .as_array()
                    .and_then(|a| a.iter().map(|x| as_usize(x).and_then(|i| u8::try_from(i).ok())).collect())
                    .ok_or_else(|| bad("an array of criterion numbers"))?
            }
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Every key with its current value, in file order.
    pub fn entries(&self) -> Vec<(&'static str, Value)> {
        let f = |x: f64| Value::Float(x);
        let i = |x: usize| Value::Integer(x as i64);
        let fl = |xs: &[f64]| Value::Array(xs.iter().map(|&x| Value::Float(x)).collect());
        let mut e = vec![
            ("kind", Value::String(self.kind.name().into())),
            ("potential", Value::String(self.potential.clone())),
            ("epsilon", f(self.epsilon)),
            ("gamma", f(self.gamma)),
        ];
        if let Some(g) = self.gamma1 {
            e.push(("gamma1", f(g)));
        }
        if let Some(g) = self.gamma2 {
            e.push(("gamma2", f(g)));
        }
        e.push(("N", self.n.map_or(Value::String("auto".into()), i)));
        e.extend([
            ("output_dir", Value::String(self.output_dir.clone())),
            ("seed", Value::Integer(self.seed as i64)),
            ("workers", i(self.workers)),
            ("instanton.tol", f(self.instanton_tol)),
            ("spectrum.h", f(self.spectrum_h)),
            ("spectrum.t_box", f(self.spectrum_t_box)),
            ("bridge.samples", i(self.bridge_samples)),
            ("bridge.refine_m", i(self.bridge_refine_m)),
            ("bridge.kappa", f(self.bridge_kappa)),
            ("chain.rho", f(self.chain.rho)),
            ("chain.n_steps", i(self.chain.n_steps)),
            ("chain.burn_in", i(self.chain.burn_in)),
            ("chain.adapt", Value::Boolean(self.chain.adapt)),
            ("chain.target_acceptance", f(self.chain.target_acceptance)),
            ("chain.thin", i(self.chain.thin)),
            ("chain.max_shift", i(self.chain.max_shift)),
            ("chain.site_sweeps", i(self.chain.site_sweeps)),
            ("chain.chains", i(self.chain.chains)),
            ("ladder.rungs", i(self.ladder_rungs)),
            ("ladder.power", f(self.ladder_power)),
            ("ladder.epsilons", fl(&self.ladder_epsilons)),
            ("rates.deltas", fl(&self.rates_deltas)),
            ("rates.norms", Value::Array(self.rates_norms.iter().map(|s| Value::String(s.clone())).collect())),
            ("rates.epsilons", fl(&self.rates_epsilons)),
            ("rates.cutoff", f(self.rates_cutoff)),
            ("interface.epsilons", fl(&self.interface_epsilons)),
            ("interface.smear_halfwidth", f(self.interface_smear_halfwidth)),
            ("interface.trim", f(self.interface_trim)),
            ("interface.cell_nodes", i(self.interface_cell_nodes)),
            ("interface.cell_halfwidth", f(self.interface_cell_halfwidth)),
            ("spde.n_x", i(self.spde_n_x)),
            ("spde.dt", f(self.spde_dt)),
            ("spde.t_end", f(self.spde_t_end)),
            ("spde.noise", Value::Boolean(self.spde_noise)),
            ("spde.burn_in", f(self.spde_burn_in)),
            ("spde.sample_every", i(self.spde_sample_every)),
            ("spde.snapshot_every", i(self.spde_snapshot_every)),
            ("spde.scaling", Value::String(self.spde_scaling.clone())),
            (
                "verify.criteria",
                Value::Array(self.verify_criteria.iter().map(|&c| Value::Integer(c as i64)).collect()),
            ),
        ]);
        e
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for (key, value) in self.entries() {
            let (sec, name) = key.split_once('.').unwrap_or(("", key));
            if sec != section {
                let _ = writeln!(out, "\n[{sec}]");
                section = sec;
            }
            let _ = writeln!(out, "{name} = {value}");
        }
        out
    }

    /// Applies `key = value` pairs; values use TOML syntax, bare words are strings.
    pub fn apply_overrides(&mut self, pairs: &[(String, String)]) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        for (k, raw) in pairs {
            let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
                .ok()
                .and_then(|t| t.get("v").cloned())
                .unwrap_or_else(|| Value::String(raw.clone()));
            if let Err(e) = self.set(k, &value) {
                errs.push(e);
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(errs))
        }
    }

    pub fn potential_spec(&self) -> Option<PotentialSpec> {
        PotentialSpec::by_name(&self.potential)
    }

    /// `(γ, γ₁, γ₂)`; unset `γ₁ = γ/4` and `γ₂` midway between its binding lower constraint and 1.
    pub fn exponents(&self) -> (f64, f64, f64) {
        let g = self.gamma;
        let g1 = self.gamma1.unwrap_or(g / 4.0);
        let g2 = self.gamma2.unwrap_or_else(|| 0.5 * ((g + g1 / 2.0).max(g1 + g / 2.0) + 1.0));
        (g, g1, g2)
    }

    /// Scale parameters at `ε` with the configured exponents and node count.
    pub fn scale_params(&self, epsilon: f64) -> acg_core::Result<ScaleParams> {
        let (g, g1, g2) = self.exponents();
        ScaleParams::new(epsilon, g, g1, g2, self.n)
    }

    pub fn chain_config(&self, seed: u64) -> ChainConfig {
        let c = &self.chain;
        ChainConfig {
            rho: c.rho,
            n_steps: c.n_steps,
            burn_in: c.burn_in,
            seed,
            adapt: c.adapt,
            target_acceptance: c.target_acceptance,
            thin: c.thin,
            max_shift: c.max_shift,
            site_sweeps: c.site_sweeps,
        }
    }

    pub fn spde_config(&self) -> Option<SpdeConfig> {
        let mut cfg = SpdeConfig::new(self.epsilon, self.gamma, self.spde_n_x, self.potential_spec()?);
        if self.spde_dt > 0.0 {
            cfg.dt = self.spde_dt;
        }
        cfg.t_end = self.spde_t_end;
        cfg.seed = self.seed;
        cfg.noise_on = self.spde_noise;
        cfg.burn_in = self.spde_burn_in;
        cfg.sample_every = if self.spde_sample_every > 0 { self.spde_sample_every } else { ((0.01 / cfg.dt).round() as usize).max(1) };
        cfg.snapshot_every = self.spde_snapshot_every;
        cfg.scaling = match self.spde_scaling.as_str() {
            "as-written" => SpdeScaling::AsWritten,
            _ => SpdeScaling::Invariant,
        };
        Some(cfg)
    }

    /// `ε` values of a sweep, defaulting to the single configured `ε`.
    pub fn sweep(&self, list: &[f64]) -> Vec<f64> {
        if list.is_empty() {
            vec![self.epsilon]
        } else {
            list.to_vec()
        }
    }

    fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.potential.is_empty() {
            v.push("missing key \"potential\"".into());
        } else if self.potential_spec().is_none() {
            v.push(format!("potential: unknown potential {:?} (one of quartic, sextic, zero)", self.potential));
        }
        if self.kind.needs_scale() {
            if self.epsilon.is_nan() {
                v.push("missing key \"epsilon\"".into());
            }
            if self.gamma.is_nan() {
                v.push("missing key \"gamma\"".into());
            }
            if !self.epsilon.is_nan() && !self.gamma.is_nan() {
                let mut eps: Vec<f64> = vec![self.epsilon];
                for list in [&self.ladder_epsilons, &self.rates_epsilons, &self.interface_epsilons] {
                    eps.extend(list.iter().copied());
                }
                for e in eps {
                    let (g, g1, g2) = self.exponents();
                    for msg in check_exponents(e, g, g1, g2) {
                        if !v.contains(&msg) {
                            v.push(msg);
                        }
                    }
                }
            }
            if self.n == Some(0) {
                v.push("Assume N≥1 (got N=0)".into());
            }
            if let Err(acg_core::Error::Constraint(c)) = self.chain_config(self.seed).validate() {
                v.extend(c.into_iter().map(|m| format!("chain: {m}")));
            }
        }
        if self.chain.chains == 0 {
            v.push("chain.chains ≥ 1".into());
        }
        if self.ladder_rungs == 0 {
            v.push("ladder.rungs ≥ 1".into());
        }
        if self.rates_deltas.iter().any(|d| !(*d >= 0.0)) {
            v.push("rates.deltas must be ≥ 0".into());
        }
        for n in &self.rates_norms {
            if n != "l2" && n != "linf" {
                v.push(format!("rates.norms: unknown norm {n:?} (l2 or linf)"));
            }
        }
        if !matches!(self.spde_scaling.as_str(), "invariant" | "as-written") {
            v.push(format!("spde.scaling: {:?} is not \"invariant\" or \"as-written\"", self.spde_scaling));
        }
        if self.kind == Kind::Spde && v.is_empty() {
            if let Some(Err(acg_core::Error::Constraint(c))) = self.spde_config().map(|c| c.validate()) {
                v.extend(c.into_iter().map(|m| format!("spde: {m}")));
            }
        }
        if self.kind == Kind::Verify {
            for c in &self.verify_criteria {
                if !(1..=11).contains(c) {
                    v.push(format!("verify.criteria: no criterion {c}"));
                }
            }
        }
        v
    }

    /// Checks the assembled config, listing every violation.
    pub fn finish(self) -> Result<Self, ConfigError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(ConfigError(v))
        }
    }
}

/// Parses config text; the error lists unknown keys, type errors and
/// constraint violations together.
pub fn parse_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_with_overrides(text, &[])
}

/// Parses config text, applies overrides, then validates.
pub fn parse_with_overrides(text: &str, pairs: &[(String, String)]) -> Result<ExperimentConfig, ConfigError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError(vec![format!("syntax: {}", e.message())]))?;
    let mut flat = Vec::new();
    flatten("", &table, &mut flat);
    let mut cfg = ExperimentConfig::default();
    let mut errs: Vec<String> = flat.iter().filter_map(|(k, v)| cfg.set(k, v).err()).collect();
    if let Err(ConfigError(e)) = cfg.apply_overrides(pairs) {
        errs.extend(e);
    }
    errs.extend(cfg.validate());
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError(errs))
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(vec![format!("{}: {e}", path.display())]))?;
    parse_str(&text)
}
