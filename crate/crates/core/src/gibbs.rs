//! Gibbs measure `μ^{N,ε} ∝ exp(−Φ) ν^{N,ε}` with `Φ(u) = ε⁻¹ ∫ F(u)`:
//! MCMC sampling, stepping-stone normalizers, a small-N quadrature oracle,
//! concentration curves and interface statistics.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{dist_to_m, fermi_project, potential_integral, Norm};
use crate::error::{Error, Result};
use crate::gaussian::{log_density, BridgeSpec};
use crate::instanton::InstantonProfile;
use crate::params::ScaleParams;
use crate::path::{Boundary, PLPath};
use crate::potential::{cutoff, surface_tension, CutoffPotential, Potential, PotentialSpec};
use crate::quadrature::{gl20, gl5};
use crate::rng::{stream, StreamRng};
use crate::stats::{batch_means_se, binomial_se, effective_sample_size, ks_uniform, log_sum_exp, mean_var};

/// Potential used in `Φ`: a registered double well or its bounded-slope cutoff.
#[derive(Debug, Clone)]
pub enum TargetPotential {
    Plain(PotentialSpec),
    Cutoff(CutoffPotential),
}

impl TargetPotential {
    pub fn base(&self) -> &PotentialSpec {
        match self {
            TargetPotential::Plain(s) => s,
            TargetPotential::Cutoff(c) => &c.base,
        }
    }

    pub fn label(&self) -> String {
        match self {
            TargetPotential::Plain(s) => s.name.clone(),
            TargetPotential::Cutoff(c) => format!("{}-cutoff{}", c.base.name, c.cut_radius),
        }
    }
}

impl Potential for TargetPotential {
    fn value(&self, u: f64) -> f64 {
        match self {
            TargetPotential::Plain(s) => s.value(u),
            TargetPotential::Cutoff(c) => c.value(u),
        }
    }
    fn d1(&self, u: f64) -> f64 {
        match self {
            TargetPotential::Plain(s) => s.d1(u),
            TargetPotential::Cutoff(c) => c.d1(u),
        }
    }
    fn d2(&self, u: f64) -> f64 {
        match self {
            TargetPotential::Plain(s) => s.d2(u),
            TargetPotential::Cutoff(c) => c.d2(u),
        }
    }
    fn d3(&self, u: f64) -> f64 {
        match self {
            TargetPotential::Plain(s) => s.d3(u),
            TargetPotential::Cutoff(c) => c.d3(u),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GibbsSpec {
    pub params: ScaleParams,
    pub potential: TargetPotential,
}

impl GibbsSpec {
    pub fn new(params: ScaleParams, spec: PotentialSpec) -> Self {
        GibbsSpec { params, potential: TargetPotential::Plain(spec) }
    }

    /// Same measure with `F` cut off outside `[−R, R]`.
    pub fn with_cutoff(params: ScaleParams, spec: PotentialSpec, radius: f64) -> Result<Self> {
        Ok(GibbsSpec { params, potential: TargetPotential::Cutoff(cutoff(&spec, radius)?) })
    }

    pub fn bridge(&self) -> BridgeSpec {
        BridgeSpec::new(self.params)
    }

    /// `δ ∫₀¹ F(a + (b − a)t) dt` with the energy module's per-cell rule.
    #[inline]
    pub fn cell_integral(&self, a: f64, b: f64) -> f64 {
        gl5().integrate(0.0, 1.0, |t| self.potential.value(a + (b - a) * t)) * self.params.mesh()
    }

    /// `Φ(u) = ε⁻¹ ∫_{−L}^{L} F(u)`.
    pub fn phi(&self, u: &PLPath) -> f64 {
        potential_integral(u, &self.potential) / self.params.epsilon
    }

    /// `H(u)` with the surface tension of the underlying double well.
    pub fn energy(&self, u: &PLPath) -> Result<f64> {
        Ok(0.5 * u.slope_sq() + potential_integral(u, &self.potential) - surface_tension(self.potential.base())?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainConfig {
    pub rho: f64,
    pub n_steps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub adapt: bool,
    pub target_acceptance: f64,
    /// Keep every `thin`-th post-burn-in state.
    pub thin: usize,
    /// Largest translation (in nodes) of the shift move; 0 disables it.
    pub max_shift: usize,
    /// Single-site sweeps per step.
    pub site_sweeps: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            rho: 0.9,
            n_steps: 20_000,
            burn_in: 2_000,
            seed: 1,
            adapt: true,
            target_acceptance: 0.25,
            thin: 1,
            max_shift: 0,
            site_sweeps: 1,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.rho > 0.0 && self.rho < 1.0) {
            bad.push(format!("0 < rho < 1 (got rho={})", self.rho));
        }
        if self.burn_in >= self.n_steps {
            bad.push(format!("burn_in < n_steps (got {} ≥ {})", self.burn_in, self.n_steps));
        }
        if self.thin == 0 {
            bad.push("thin ≥ 1".into());
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            bad.push(format!("0 < target_acceptance < 1 (got {})", self.target_acceptance));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Constraint(bad))
        }
    }

    pub fn kept(&self) -> usize {
        (self.n_steps - self.burn_in).div_ceil(self.thin)
    }
}

/// Observable recorded along a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Observable {
    Phi,
    Energy,
    DistL2,
    DistLinf,
    XiHat,
    /// `u(0)`.
    Center,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::Phi => "phi",
            Observable::Energy => "energy",
            Observable::DistL2 => "dist_l2",
            Observable::DistLinf => "dist_linf",
            Observable::XiHat => "xi_hat",
            Observable::Center => "u0",
        }
    }

    fn needs_profile(self) -> bool {
        matches!(self, Observable::DistL2 | Observable::DistLinf | Observable::XiHat)
    }
}

/// Evaluates an observable; `NaN` marks an undefined value (e.g. no Fermi shift).
pub fn observe(spec: &GibbsSpec, u: &PLPath, phi: f64, obs: Observable, p: Option<&InstantonProfile>) -> f64 {
    match obs {
        Observable::Phi => phi,
        Observable::Energy => spec.energy(u).unwrap_or(f64::NAN),
        Observable::Center => u.eval(0.0),
        Observable::DistL2 => p.map_or(f64::NAN, |p| dist_to_m(u, p, Norm::L2)),
        Observable::DistLinf => p.map_or(f64::NAN, |p| dist_to_m(u, p, Norm::Linf)),
        Observable::XiHat => p.and_then(|p| fermi_project(u, p).ok()).map_or(f64::NAN, |f| f.xi),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservableSummary {
    pub name: &'static str,
    pub mean: f64,
    pub se: f64,
    pub ess: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GibbsReport {
    pub acceptance_rate: f64,
    pub site_acceptance: f64,
    pub shift_acceptance: f64,
    pub final_rho: f64,
    pub n_chains: usize,
    pub n_kept: usize,
    pub effective_sample_size: f64,
    pub observables: Vec<ObservableSummary>,
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub report: GibbsReport,
    /// One trace per requested observable, concatenated over chains.
    pub traces: Vec<Vec<f64>>,
    /// Kept states when requested.
    pub samples: Vec<PLPath>,
}

/// Chain state with per-cell potential integrals for local updates.
struct Chain<'a> {
    spec: &'a GibbsSpec,
    beta: f64,
    x: Vec<f64>,
    cells: Vec<f64>,
    mean: Vec<f64>,
    rho: f64,
    rng: StreamRng,
    fill_corr: f64,
    fill_sd: f64,
    counts: [(usize, usize); 3],
}

impl<'a> Chain<'a> {
    fn new(spec: &'a GibbsSpec, beta: f64, rho: f64, rng: StreamRng) -> Self {
        let p = spec.params;
        let bridge = spec.bridge();
        let mean: Vec<f64> = (0..p.n_nodes()).map(|k| bridge.mean(p.node(k))).collect();
        let mut x = mean.clone();
        x[0] = -1.0;
        *x.last_mut().unwrap() = 1.0;
        let c2 = spec.potential.base().d2(1.0).max(0.0).sqrt();
        // without a well the fill is the reference random walk
        let (fill_corr, fill_sd) = if c2 > 0.0 {
            let a = (-c2 * p.mesh()).exp();
            (a, (p.epsilon / (2.0 * c2) * (1.0 - a * a)).sqrt())
        } else {
            (1.0, (p.epsilon * p.mesh()).sqrt())
        };
        let mut c = Chain { spec, beta, x, cells: Vec::new(), mean, rho, rng, fill_corr, fill_sd, counts: [(0, 0); 3] };
        c.cells = c.cell_vec(&c.x);
        c
    }

    fn cell_vec(&self, x: &[f64]) -> Vec<f64> {
        x.windows(2).map(|w| self.spec.cell_integral(w[0], w[1])).collect()
    }

    fn phi(&self) -> f64 {
        self.cells.iter().sum::<f64>() / self.spec.params.epsilon
    }

    fn kinetic(x: &[f64], delta: f64) -> f64 {
        x.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / delta
    }

    fn accept(&mut self, log_ratio: f64) -> bool {
        log_ratio >= 0.0 || self.rng.random::<f64>() < log_ratio.exp()
    }

    fn pcn(&mut self) -> bool {
        let p = self.spec.params;
        let n = self.x.len();
        let sd = (p.epsilon * p.mesh()).sqrt();
        let mut walk = vec![0.0; n];
        for k in 1..n {
            walk[k] = walk[k - 1] + sd * self.rng.sample::<f64, _>(StandardNormal);
        }
        let end = walk[n - 1];
        let s = (1.0 - self.rho * self.rho).sqrt();
        let mut y = self.x.clone();
        for k in 1..n - 1 {
            let b = walk[k] - end * k as f64 / (n - 1) as f64;
            y[k] = self.mean[k] + self.rho * (self.x[k] - self.mean[k]) + s * b;
        }
        let cells = self.cell_vec(&y);
        let new_phi = cells.iter().sum::<f64>() / p.epsilon;
        let ok = self.accept(self.beta * (self.phi() - new_phi));
        if ok {
            self.x = y;
            self.cells = cells;
        }
        self.counts[0].1 += 1;
        self.counts[0].0 += ok as usize;
        ok
    }

    fn sweep(&mut self) {
        let p = self.spec.params;
        let sd = (0.5 * p.epsilon * p.mesh()).sqrt();
        for k in 1..self.x.len() - 1 {
            let m = 0.5 * (self.x[k - 1] + self.x[k + 1]);
            let y = m + sd * self.rng.sample::<f64, _>(StandardNormal);
            let left = self.spec.cell_integral(self.x[k - 1], y);
            let right = self.spec.cell_integral(y, self.x[k + 1]);
            let d = (left + right - self.cells[k - 1] - self.cells[k]) / p.epsilon;
            let ok = self.accept(-self.beta * d);
            if ok {
                self.x[k] = y;
                self.cells[k - 1] = left;
                self.cells[k] = right;
            }
            self.counts[1].1 += 1;
            self.counts[1].0 += ok as usize;
        }
    }

    /// Translation by `k` nodes. Vacated nodes are filled by an AR(1) chain
    /// started at the adjacent boundary value, with the stationary law of
    /// the linearized well fluctuation (variance `ε/(2c₂)`, correlation
    /// `e^{−c₂δ}`); the removed block enters through the reverse-move density.
    fn shift(&mut self, max_shift: usize) {
        let m = self.x.len() - 2;
        let kmax = max_shift.min(m);
        if kmax == 0 {
            return;
        }
        let k = self.rng.random_range(1..=kmax);
        let right = self.rng.random::<bool>();
        let (a, sd) = (self.fill_corr, self.fill_sd);
        // log density of a block generated outward-in from the boundary at `well`
        let block_lq = |vals: &mut dyn Iterator<Item = f64>, well: f64| {
            let mut prev = well;
            let mut acc = 0.0;
            for v in vals {
                acc -= 0.5 * ((v - well - a * (prev - well)) / sd).powi(2);
                prev = v;
            }
            acc
        };
        let mut y = self.x.clone();
        let fill = |well: f64, rng: &mut StreamRng| {
            let mut prev = well;
            (0..k)
                .map(|_| {
                    prev = well + a * (prev - well) + sd * rng.sample::<f64, _>(StandardNormal);
                    prev
                })
                .collect::<Vec<f64>>()
        };
        let log_q = if right {
            for i in (k + 1..=m).rev() {
                y[i] = self.x[i - k];
            }
            let new = fill(-1.0, &mut self.rng);
            for (j, v) in new.iter().enumerate() {
                y[j + 1] = *v;
            }
            block_lq(&mut (m - k + 1..=m).rev().map(|i| self.x[i]), 1.0) - block_lq(&mut new.iter().copied(), -1.0)
        } else {
            for i in 1..=m - k {
                y[i] = self.x[i + k];
            }
            let new = fill(1.0, &mut self.rng);
            for (j, v) in new.iter().enumerate() {
                y[m - j] = *v;
            }
            block_lq(&mut (1..=k).map(|i| self.x[i]), -1.0) - block_lq(&mut new.iter().copied(), 1.0)
        };
        let p = self.spec.params;
        let cells = self.cell_vec(&y);
        let new_phi = cells.iter().sum::<f64>() / p.epsilon;
        let d_kin = (Self::kinetic(&y, p.mesh()) - Self::kinetic(&self.x, p.mesh())) / (2.0 * p.epsilon);
        let ok = self.accept(-d_kin - self.beta * (new_phi - self.phi()) + log_q);
        if ok {
            self.x = y;
            self.cells = cells;
        }
        self.counts[2].1 += 1;
        self.counts[2].0 += ok as usize;
    }

    fn path(&self) -> PLPath {
        PLPath { params: self.spec.params, values: self.x.clone(), boundary: Boundary::Kink }
    }

    fn check(&self, step: usize) -> Result<()> {
        let phi = self.phi();
        if !phi.is_finite() || phi < 0.0 {
            let max_abs = self.x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            return Err(Error::ChainAbort {
                step,
                reason: format!("Φ = {phi} with max |u| = {max_abs}, rho = {}, state head {:?}", self.rho, &self.x[..self.x.len().min(6)]),
            });
        }
        Ok(())
    }
}

fn rate(c: (usize, usize)) -> f64 {
    if c.1 == 0 {
        0.0
    } else {
        c.0 as f64 / c.1 as f64
    }
}

struct SingleChain {
    traces: Vec<Vec<f64>>,
    samples: Vec<PLPath>,
    counts: [(usize, usize); 3],
    rho: f64,
}

/// Runs one chain at inverse-temperature fraction `beta`, calling `record`
/// on each kept state with its `Φ`.
fn run_single(
    spec: &GibbsSpec,
    cfg: &ChainConfig,
    beta: f64,
    replica: u64,
    mut record: impl FnMut(&PLPath, f64),
) -> Result<([(usize, usize); 3], f64)> {
    cfg.validate()?;
    let mut chain = Chain::new(spec, beta, cfg.rho, stream(cfg.seed, &[0x6769_6262, replica]));
    for t in 0..cfg.n_steps {
        let ok = chain.pcn();
        if cfg.adapt && t < cfg.burn_in {
            let gain = 1.0 / ((t + 1) as f64).powf(0.6);
            let a = (1.0 - chain.rho).ln() + gain * ((ok as u8 as f64) - cfg.target_acceptance);
            chain.rho = (1.0 - a.exp()).clamp(0.0, 1.0 - 1e-6);
        }
        for _ in 0..cfg.site_sweeps {
            chain.sweep();
        }
        if cfg.max_shift > 0 {
            chain.shift(cfg.max_shift);
        }
        if t % 64 == 0 || t + 1 == cfg.n_steps {
            chain.check(t)?;
        }
        if t == cfg.burn_in {
            chain.counts = [(0, 0); 3];
        }
        if t >= cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0 {
            let phi = chain.phi();
            record(&chain.path(), phi);
        }
    }
    Ok((chain.counts, chain.rho))
}

fn run_replica(
    spec: &GibbsSpec,
    cfg: &ChainConfig,
    beta: f64,
    replica: u64,
    obs: &[Observable],
    p: Option<&InstantonProfile>,
    keep: bool,
) -> Result<SingleChain> {
    let mut traces = vec![Vec::with_capacity(cfg.kept()); obs.len()];
    let mut samples = Vec::new();
    let (counts, rho) = run_single(spec, cfg, beta, replica, |u, phi| {
        for (t, &o) in traces.iter_mut().zip(obs) {
            t.push(observe(spec, u, phi, o, p));
        }
        if keep {
            samples.push(u.clone());
        }
    })?;
    Ok(SingleChain { traces, samples, counts, rho })
}

fn summarize(name: &'static str, per_chain: &[&Vec<f64>]) -> ObservableSummary {
    let mut total = 0usize;
    let (mut sum, mut var_sum, mut ess) = (0.0, 0.0, 0.0);
    for t in per_chain {
        let clean: Vec<f64> = t.iter().copied().filter(|v| v.is_finite()).collect();
        if clean.len() < 2 {
            continue;
        }
        let n = clean.len();
        let (m, _) = mean_var(&clean);
        let se = batch_means_se(&clean, 20);
        sum += m * n as f64;
        var_sum += (se * n as f64).powi(2);
        ess += effective_sample_size(&clean, 20);
        total += n;
    }
    if total == 0 {
        return ObservableSummary { name, mean: f64::NAN, se: f64::NAN, ess: 0.0 };
    }
    ObservableSummary { name, mean: sum / total as f64, se: var_sum.sqrt() / total as f64, ess }
}

/// Runs `n_chains` independent chains (streams keyed by replica index) and
/// merges their statistics; the result does not depend on the worker count.
pub fn mcmc_chain(
    spec: &GibbsSpec,
    cfg: &ChainConfig,
    n_chains: usize,
    obs: &[Observable],
    profile: Option<&InstantonProfile>,
    keep_samples: bool,
) -> Result<ChainOutput> {
    run_tempered(spec, cfg, 1.0, n_chains, obs, profile, keep_samples)
}

fn run_tempered(
    spec: &GibbsSpec,
    cfg: &ChainConfig,
    beta: f64,
    n_chains: usize,
    obs: &[Observable],
    profile: Option<&InstantonProfile>,
    keep_samples: bool,
) -> Result<ChainOutput> {
    cfg.validate()?;
    if obs.iter().any(|o| o.needs_profile()) && profile.is_none() {
        return Err(Error::InvalidParameter("distance observables need an instanton profile".into()));
    }
    let chains: Vec<SingleChain> = (0..n_chains.max(1))
        .into_par_iter()
        .map(|r| run_replica(spec, cfg, beta, r as u64, obs, profile, keep_samples))
        .collect::<Result<_>>()?;
    let mut counts = [(0, 0); 3];
    for c in &chains {
        for i in 0..3 {
            counts[i].0 += c.counts[i].0;
            counts[i].1 += c.counts[i].1;
        }
    }
    let observables: Vec<ObservableSummary> = obs
        .iter()
        .enumerate()
        .map(|(i, o)| summarize(o.name(), &chains.iter().map(|c| &c.traces[i]).collect::<Vec<_>>()))
        .collect();
    let n_kept: usize = chains.iter().map(|c| c.traces.first().map_or(c.samples.len(), |t| t.len())).sum();
    let ess = observables.iter().map(|o| o.ess).fold(f64::INFINITY, f64::min);
    let report = GibbsReport {
        acceptance_rate: rate(counts[0]),
        site_acceptance: rate(counts[1]),
        shift_acceptance: rate(counts[2]),
        final_rho: chains.iter().map(|c| c.rho).sum::<f64>() / chains.len() as f64,
        n_chains: chains.len(),
        n_kept,
        effective_sample_size: if ess.is_finite() { ess.min(n_kept as f64) } else { n_kept as f64 },
        observables,
    };
    let mut traces = vec![Vec::new(); obs.len()];
    let mut samples = Vec::new();
    for c in chains {
        for (t, ct) in traces.iter_mut().zip(c.traces) {
            t.extend(ct);
        }
        samples.extend(c.samples);
    }
    Ok(ChainOutput { report, traces, samples })
}

/// Inverse-temperature fractions `(j/K)^p`, `j = 0..=K`.
pub fn power_ladder(k: usize, power: f64) -> Vec<f64> {
    (0..=k).map(|j| (j as f64 / k as f64).powf(power)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RungStat {
    pub beta: f64,
    pub next_beta: f64,
    pub log_mean_weight: f64,
    pub se: f64,
    pub weight_ess: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZEstimate {
    pub log_z: f64,
    pub se: f64,
    pub eps_log_z: f64,
    pub rungs: Vec<RungStat>,
}

/// Smallest effective number of weights accepted on a rung.
pub const MIN_RUNG_ESS: f64 = 10.0;

/// Stepping-stone estimate of `log Z = log E_ν[exp(−Φ)]`.
pub fn estimate_log_z(spec: &GibbsSpec, ladder: &[f64], cfg: &ChainConfig, n_chains: usize) -> Result<ZEstimate> {
    if ladder.len() < 2 || ladder[0] != 0.0 || *ladder.last().unwrap() != 1.0 || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("ladder must increase strictly from 0 to 1".into()));
    }
    let rungs: Vec<RungStat> = (0..ladder.len() - 1)
        .into_par_iter()
        .map(|j| -> Result<RungStat> {
            let (b, nb) = (ladder[j], ladder[j + 1]);
            let mut rcfg = cfg.clone();
            rcfg.seed = crate::rng::derive_seed(cfg.seed, &[0x7275_6e67, j as u64]);
            let out = run_tempered(spec, &rcfg, b, n_chains, &[Observable::Phi], None, false)?;
            let phis = &out.traces[0];
            let lw: Vec<f64> = phis.iter().map(|p| -(nb - b) * p).collect();
            let n = lw.len() as f64;
            let lse = log_sum_exp(&lw);
            let log_mean = lse - n.ln();
            let w: Vec<f64> = lw.iter().map(|l| (l - log_mean).exp()).collect();
            let sq: f64 = w.iter().map(|v| v * v).sum();
            let weight_ess = n * n / sq;
            if !(weight_ess >= MIN_RUNG_ESS) {
                return Err(Error::RungRefinement { rung: j, ess: weight_ess });
            }
            let per_chain = w.len() / out.report.n_chains;
            let se = if per_chain >= 40 {
                let ses: Vec<f64> = w.chunks(per_chain).map(|c| batch_means_se(c, 20)).collect();
                (ses.iter().map(|s| s * s).sum::<f64>()).sqrt() / ses.len() as f64
            } else {
                batch_means_se(&w, 20)
            };
            Ok(RungStat { beta: b, next_beta: nb, log_mean_weight: log_mean, se, weight_ess })
        })
        .collect::<Result<_>>()?;
    let log_z: f64 = rungs.iter().map(|r| r.log_mean_weight).sum();
    let se = rungs.iter().map(|r| r.se * r.se).sum::<f64>().sqrt();
    Ok(ZEstimate { log_z, se, eps_log_z: spec.params.epsilon * log_z, rungs })
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub log_z: f64,
    pub mean_phi: f64,
    pub mean_center: f64,
    pub mean_center_sq: f64,
    /// `E[dist_{L²}(u, M)]` on the coarser distance grid, when a profile is given.
    pub mean_dist_l2: Option<f64>,
    pub boundary_mass: f64,
    pub points_per_axis: usize,
}

/// Box half-width around the mean path.
pub const ORACLE_HALF_WIDTH: f64 = 3.0;
/// Largest admissible share of the integrand carried by the boundary shell,
/// the outer tenth of the half-width on any axis.
pub const ORACLE_BOUNDARY_TOL: f64 = 1e-8;

fn tensor_axes(spec: &GibbsSpec, panels: usize, half: f64) -> Vec<Vec<(f64, f64, bool)>> {
    let p = spec.params;
    let bridge = spec.bridge();
    let rule = gl20();
    (1..p.n_nodes() - 1)
        .map(|i| {
            let c = bridge.mean(p.node(i));
            let h = 2.0 * half / panels as f64;
            (0..panels)
                .flat_map(|k| {
                    let a = c - half + k as f64 * h;
                    rule.mapped(a, a + h).map(move |(x, w)| (x, w, (x - c).abs() > 0.9 * half)).collect::<Vec<_>>()
                })
                .collect()
        })
        .collect()
}

fn for_tensor(axes: &[Vec<(f64, f64, bool)>], mut f: impl FnMut(&[f64], f64, bool)) {
    let d = axes.len();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    loop {
        let mut w = 1.0;
        let mut outer = false;
        for (j, &i) in idx.iter().enumerate() {
            let (xi, wi, oi) = axes[j][i];
            x[j] = xi;
            w *= wi;
            outer |= oi;
        }
        f(&x, w, outer);
        let mut j = 0;
        loop {
            idx[j] += 1;
            if idx[j] < axes[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
            if j == d {
                return;
            }
        }
    }
}

/// Brute-force tensor Gauss–Legendre integration over the node box for at
/// most three free nodes; `panels` 20-point panels per axis.
pub fn direct_small_n_oracle(spec: &GibbsSpec, panels: usize, profile: Option<&InstantonProfile>) -> Result<OracleResult> {
    let p = spec.params;
    let dim = p.n_nodes() - 2;
    if dim > 3 {
        return Err(Error::InvalidParameter(format!("oracle handles at most 3 free nodes, got {dim}")));
    }
    if panels < 10 {
        return Err(Error::InvalidParameter(format!("oracle needs at least 10 panels (200 points) per axis, got {panels}")));
    }
    let bridge = spec.bridge();
    let axes = tensor_axes(spec, panels, ORACLE_HALF_WIDTH);
    let center = p.n_nodes() / 2;
    let (mut z, mut zb, mut m_phi, mut m_c, mut m_c2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for_tensor(&axes, |x, w, outer| {
        let u = PLPath::from_interior(p, x, Boundary::Kink).expect("finite node values");
        let phi = spec.phi(&u);
        let g = w * (log_density(&bridge, &u).expect("kink path") - phi).exp();
        z += g;
        if outer {
            zb += g;
        }
        m_phi += g * phi;
        m_c += g * u.values[center];
        m_c2 += g * u.values[center].powi(2);
    });
    let boundary_mass = zb / z;
    if boundary_mass > ORACLE_BOUNDARY_TOL {
        return Err(Error::BoxTooSmall { fraction: boundary_mass });
    }
    let mean_dist_l2 = profile.map(|prof| {
        let coarse = tensor_axes(spec, 2, ORACLE_HALF_WIDTH);
        let (mut zc, mut md) = (0.0, 0.0);
        for_tensor(&coarse, |x, w, _| {
            let u = PLPath::from_interior(p, x, Boundary::Kink).expect("finite node values");
            let g = w * (log_density(&bridge, &u).expect("kink path") - spec.phi(&u)).exp();
            zc += g;
            md += g * dist_to_m(&u, prof, Norm::L2);
        });
        md / zc
    });
    Ok(OracleResult {
        log_z: z.ln(),
        mean_phi: m_phi / z,
        mean_center: m_c / z,
        mean_center_sq: m_c2 / z,
        mean_dist_l2,
        boundary_mass,
        points_per_axis: 20 * panels,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RateEntry {
    pub epsilon: f64,
    pub delta: f64,
    pub potential: String,
    pub exceed: usize,
    pub n: usize,
    pub p_hat: f64,
    pub se: f64,
    pub eps_log_p: f64,
    /// `p_hat` is the one-sided 95% upper bound `3/n` because no sample exceeded `δ`.
    pub upper_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateCurve {
    pub norm: Norm,
    pub entries: Vec<RateEntry>,
}

/// Minimum post-burn-in samples per ladder point.
pub const MIN_RATE_SAMPLES: usize = 10_000;

/// Rate entries from distance samples already drawn at one `ε`.
pub fn rate_entries(epsilon: f64, potential: &str, dists: &[f64], deltas: &[f64]) -> Vec<RateEntry> {
    let n = dists.len();
    deltas
        .iter()
        .map(|&delta| {
            let exceed = dists.iter().filter(|&&d| d >= delta).count();
            let (p_hat, upper) = if exceed == 0 { (3.0 / n as f64, true) } else { (exceed as f64 / n as f64, false) };
            RateEntry {
                epsilon,
                delta,
                potential: potential.to_string(),
                exceed,
                n,
                p_hat,
                se: binomial_se(p_hat, n),
                eps_log_p: epsilon * p_hat.ln(),
                upper_bound: upper,
            }
        })
        .collect()
}

/// `p̂(ε, δ) = μ̂(dist(u, M) ≥ δ)` along a family of specs.
pub fn concentration_curve(
    specs: &[GibbsSpec],
    deltas: &[f64],
    norm: Norm,
    cfg: &ChainConfig,
    n_chains: usize,
    profile: &InstantonProfile,
) -> Result<RateCurve> {
    let obs = match norm {
        Norm::L2 => Observable::DistL2,
        Norm::Linf => Observable::DistLinf,
        Norm::H1 => return Err(Error::InvalidParameter("rate curves use the L² or L∞ distance".into())),
    };
    let mut entries = Vec::new();
    for spec in specs {
        let out = mcmc_chain(spec, cfg, n_chains, &[obs], Some(profile), false)?;
        if out.traces[0].len() < MIN_RATE_SAMPLES {
            return Err(Error::InvalidParameter(format!(
                "ε = {}: {} samples, need at least {MIN_RATE_SAMPLES}",
                spec.params.epsilon,
                out.traces[0].len()
            )));
        }
        entries.extend(rate_entries(spec.params.epsilon, &spec.potential.label(), &out.traces[0], deltas));
    }
    Ok(RateCurve { norm, entries })
}

/// `ξ̃ = ε^γ ξ`: stretched coordinate to the original interval `[−1, 1]`.
pub fn to_original(params: &ScaleParams, s: f64) -> f64 {
    s * params.epsilon.powf(params.gamma)
}

/// `ũ(x) = u(x/ε^γ)` for `x` in `[−1, 1]`.
pub fn eval_original(u: &PLPath, x: f64) -> f64 {
    u.eval(x / u.params.epsilon.powf(u.params.gamma))
}

/// `Φ̃(ũ) = ε^{−1−γ} ∫_{−1}^{1} F(ũ)` for node values on the original grid
/// `x_k = −1 + k/N`; equals `Φ` of the same node vector on the stretched grid.
pub fn original_scale_phi(params: &ScaleParams, values: &[f64], f: &dyn Potential) -> f64 {
    let h = 1.0 / params.n as f64;
    let rule = gl5();
    let integral: f64 = values.windows(2).map(|w| rule.integrate(0.0, 1.0, |t| f.value(w[0] + (w[1] - w[0]) * t)) * h).sum();
    integral * params.epsilon.powf(-1.0 - params.gamma)
}

/// Finite-dimensional law of the original-scale bridge at points `s` in
/// `(−1, 1)`: `P_{s₁+1}(−1, x₁) ⋯ P_{1−s_n}(x_n, 1) / P₂(−1, 1)` with the
/// heat kernel of variance rate `ε^{1−γ}`.
pub fn findim_log_density(epsilon: f64, gamma: f64, s: &[f64], x: &[f64]) -> f64 {
    let rate = epsilon.powf(1.0 - gamma);
    let lk = |t: f64, a: f64, b: f64| -0.5 * (2.0 * std::f64::consts::PI * rate * t).ln() - (b - a).powi(2) / (2.0 * rate * t);
    let mut acc = 0.0;
    let (mut s0, mut x0) = (-1.0, -1.0);
    for (&si, &xi) in s.iter().zip(x) {
        acc += lk(si - s0, x0, xi);
        s0 = si;
        x0 = xi;
    }
    acc + lk(1.0 - s0, x0, 1.0) - lk(2.0, -1.0, 1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct InterfaceStats {
    /// Interface positions on `[−1, 1]`.
    pub xi_hat: Vec<f64>,
    pub n_no_interface: usize,
    pub n_fallback: usize,
    pub mean: f64,
    pub variance: f64,
    pub trim: f64,
    pub ks_trimmed: f64,
    pub n_trimmed: usize,
    /// Occupation counts of `A_k^N`, `k = 1..N_A − 1`.
    pub cell_counts: Vec<usize>,
    pub cell_nodes: usize,
    pub cell_halfwidth: f64,
}

/// First zero crossing of the smeared field `û(x) = (1/2δ̂)∫_{x−δ̂}^{x+δ̂} ũ`.
fn smeared_crossing(u: &PLPath, half: f64) -> Option<f64> {
    let n = 400;
    let smeared = |x: f64| gl5().integrate(x - half, x + half, |y| eval_original(u, y)) / (2.0 * half);
    let mut prev = (-1.0, smeared(-1.0));
    for i in 1..=n {
        let x = -1.0 + 2.0 * i as f64 / n as f64;
        let v = smeared(x);
        if prev.1 < 0.0 && v >= 0.0 {
            return Some(prev.0 + (x - prev.0) * prev.1 / (prev.1 - v));
        }
        prev = (x, v);
    }
    None
}

/// Interface statistics in the original scaling.
///
/// `cell_nodes = N_A` fixes the points `s_k = 2k/N_A − 1`; a sample lies in
/// `A_k` when `ũ(s_1..s_k) ∈ [−1 − h, −1 + h]` and the remaining points lie in
/// `[1 − h, 1 + h]`.
pub fn interface_stats(
    samples: &[PLPath],
    p: &InstantonProfile,
    smear_halfwidth: f64,
    trim: f64,
    cell_nodes: usize,
    cell_halfwidth: f64,
) -> InterfaceStats {
    let results: Vec<(Option<f64>, bool, Option<usize>)> = samples
        .par_iter()
        .map(|u| {
            let interior = u.interior();
            let no_interface = interior.iter().all(|&v| v > 0.0) || interior.iter().all(|&v| v < 0.0);
            let cell = (1..cell_nodes).find(|&k| {
                (1..cell_nodes).all(|j| {
                    let v = eval_original(u, 2.0 * j as f64 / cell_nodes as f64 - 1.0);
                    let target = if j <= k { -1.0 } else { 1.0 };
                    (v - target).abs() <= cell_halfwidth
                })
            });
            if no_interface {
                return (None, false, cell);
            }
            match fermi_project(u, p) {
                Ok(f) => (Some(to_original(&u.params, f.xi)), false, cell),
                Err(_) => (smeared_crossing(u, smear_halfwidth), true, cell),
            }
        })
        .collect();
    let xi_hat: Vec<f64> = results.iter().filter_map(|r| r.0).collect();
    let n_no_interface = results.iter().filter(|r| r.0.is_none()).count();
    let n_fallback = results.iter().filter(|r| r.1 && r.0.is_some()).count();
    let mut cell_counts = vec![0; cell_nodes.saturating_sub(1)];
    for r in &results {
        if let Some(k) = r.2 {
            cell_counts[k - 1] += 1;
        }
    }
    let (mean, variance) = if xi_hat.is_empty() { (f64::NAN, f64::NAN) } else { mean_var(&xi_hat) };
    let trimmed: Vec<f64> = xi_hat.iter().copied().filter(|x| x.abs() <= trim).collect();
    InterfaceStats {
        ks_trimmed: if trimmed.is_empty() { 1.0 } else { ks_uniform(&trimmed, -trim, trim) },
        n_trimmed: trimmed.len(),
        xi_hat,
        n_no_interface,
        n_fallback,
        mean,
        variance,
        trim,
        cell_counts,
        cell_nodes,
        cell_halfwidth,
    }
}

/// Largest pairwise difference of cell counts in units of its multinomial SE.
pub fn cell_count_max_z(counts: &[usize], n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..counts.len() {
        for j in i + 1..counts.len() {
            let (a, b) = (counts[i] as f64 / n as f64, counts[j] as f64 / n as f64);
            let var = (a + b - (a - b).powi(2)) / n as f64;
            if var > 0.0 {
                worst = worst.max((a - b).abs() / var.sqrt());
            }
        }
    }
    worst
}
