//! Semi-implicit finite-difference integration of the stochastic Allen-Cahn
//! equation on `[−1, 1]` with Dirichlet data `u(±1) = ±1`.
//!
//! Each step solves `(Id − dt Δ_h) u' = u − dt·a·F'(u) + σ √(dt/h) η`.
//! With [`SpdeScaling::Invariant`] the coefficients are `a = ε^(−2γ)`,
//! `σ = √2 ε^((1−γ)/2)`, for which the (space-continuous) invariant law is the
//! Gibbs measure with reference bridge variance rate `ε^(1−γ)` and weight
//! `exp(−ε^(−1−γ) ∫ F)`. [`SpdeScaling::AsWritten`] uses
//! `a = ε^(−1−γ)`, `σ = ε^((1−γ)/2)` literally.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::energy::{dist_to_m, fermi_project, Norm};
use crate::error::{Error, Result};
use crate::gibbs::{eval_original, to_original};
use crate::instanton::InstantonProfile;
use crate::params::ScaleParams;
use crate::path::{Boundary, PLPath};
use crate::potential::{Potential, PotentialSpec};
use crate::rng::{stream, StreamRng};
use crate::stats::{batch_means_se, effective_sample_size, mean_var};

/// Blow-up threshold on `max |u|`.
pub const BLOW_UP: f64 = 10.0;
/// `dt ≤ STABILITY_MARGIN · h²`.
pub const STABILITY_MARGIN: f64 = 1.0;
/// Largest admissible `dt · a · F''(1)` for the explicit reaction term.
pub const REACTION_MARGIN: f64 = 0.5;
/// Nodes required inside `|u| < 0.9` of the stationary profile.
pub const MIN_INTERFACE_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpdeScaling {
    /// Coefficients whose invariant law is the Gibbs measure sampled by [`crate::gibbs`].
    Invariant,
    /// Drift `ε^(−1−γ)` and noise `ε^((1−γ)/2)` as printed in the equation.
    AsWritten,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpdeConfig {
    pub epsilon: f64,
    pub gamma: f64,
    /// Interior nodes; must be odd so that `x = 0` is a node.
    pub n_x: usize,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub noise_on: bool,
    #[serde(skip)]
    pub potential: PotentialSpec,
    pub scaling: SpdeScaling,
    /// Time discarded before observables are recorded.
    pub burn_in: f64,
    /// Steps between observable records.
    pub sample_every: usize,
    /// Steps between stored snapshots; 0 stores none.
    pub snapshot_every: usize,
}

impl SpdeConfig {
    /// Defaults: `dt = h²/4`, `t_end = 10`, noise on, observables every `0.01` time units.
    pub fn new(epsilon: f64, gamma: f64, n_x: usize, potential: PotentialSpec) -> Self {
        let h = 2.0 / (n_x + 1) as f64;
        let dt = h * h / 4.0;
        SpdeConfig {
            epsilon,
            gamma,
            n_x,
            dt,
            t_end: 10.0,
            seed: 1,
            noise_on: true,
            potential,
            scaling: SpdeScaling::Invariant,
            burn_in: 0.0,
            sample_every: ((0.01 / dt).round() as usize).max(1),
            snapshot_every: 0,
        }
    }

    pub fn h(&self) -> f64 {
        2.0 / (self.n_x + 1) as f64
    }

    /// Coefficient `a` of `F'` in the drift.
    pub fn drift_coeff(&self) -> f64 {
        match self.scaling {
            SpdeScaling::Invariant => self.epsilon.powf(-2.0 * self.gamma),
            SpdeScaling::AsWritten => self.epsilon.powf(-1.0 - self.gamma),
        }
    }

    /// Noise amplitude `σ`.
    pub fn noise_coeff(&self) -> f64 {
        let base = self.epsilon.powf(0.5 * (1.0 - self.gamma));
        match self.scaling {
            SpdeScaling::Invariant => std::f64::consts::SQRT_2 * base,
            SpdeScaling::AsWritten => base,
        }
    }

    /// Interior node positions `x_k = −1 + k h`.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.h();
        (1..=self.n_x).map(|k| -1.0 + k as f64 * h).collect()
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Stretched-grid parameters whose nodes coincide with the SPDE grid.
    pub fn grid_params(&self) -> Result<ScaleParams> {
        ScaleParams::with_nodes(self.epsilon, self.gamma, (self.n_x + 1) / 2)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            bad.push(format!("0 < ε < 1 (got ε={})", self.epsilon));
        }
        if !(self.gamma > 0.0 && self.gamma < 2.0 / 3.0) {
            bad.push(format!("0 < γ < 2/3 (got γ={})", self.gamma));
        }
        if self.n_x < 3 || self.n_x % 2 == 0 {
            bad.push(format!("n_x odd and ≥ 3 (got {})", self.n_x));
        }
        if !(self.dt > 0.0) {
            bad.push(format!("dt > 0 (got {})", self.dt));
        }
        if !(self.t_end > 0.0) {
            bad.push(format!("t_end > 0 (got {})", self.t_end));
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.t_end) {
            bad.push(format!("0 ≤ burn_in < t_end (got {})", self.burn_in));
        }
        if self.sample_every == 0 {
            bad.push("sample_every ≥ 1".into());
        }
        let h = self.h();
        if self.dt > STABILITY_MARGIN * h * h {
            bad.push(format!("dt ≤ h² (got dt={:e}, h²={:e})", self.dt, h * h));
        }
        let stiff = self.dt * self.drift_coeff() * self.potential.d2(1.0).abs();
        if stiff > REACTION_MARGIN {
            bad.push(format!("dt·a·F''(1) ≤ {REACTION_MARGIN} (got {stiff:.3})"));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Constraint(bad))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldState {
    pub time: f64,
    /// Interior values; the boundary values `∓1` are implicit.
    pub values: Vec<f64>,
}

impl FieldState {
    /// Straight line `u(x) = x`.
    pub fn linear(cfg: &SpdeConfig) -> Self {
        FieldState { time: 0.0, values: cfg.nodes() }
    }

    /// Values including the boundary nodes.
    pub fn full(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.values.len() + 2);
        v.push(-1.0);
        v.extend_from_slice(&self.values);
        v.push(1.0);
        v
    }

    /// Piecewise-linear interpolation at `x ∈ [−1, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        let full = self.full();
        let h = 2.0 / (full.len() - 1) as f64;
        let t = ((x + 1.0) / h).clamp(0.0, (full.len() - 1) as f64);
        let k = (t.floor() as usize).min(full.len() - 2);
        let w = t - k as f64;
        full[k] * (1.0 - w) + full[k + 1] * w
    }

    /// The same field as a path on the stretched grid of [`SpdeConfig::grid_params`].
    pub fn to_path(&self, params: ScaleParams) -> Result<PLPath> {
        PLPath::new(params, self.full(), Boundary::Kink)
    }
}

/// Discrete Lyapunov functional `h Σ ½((u_{k+1} − u_k)/h)² + a h Σ F(u_k)`.
pub fn lyapunov(cfg: &SpdeConfig, state: &FieldState) -> f64 {
    let h = cfg.h();
    let full = state.full();
    let grad: f64 = full.windows(2).map(|w| 0.5 * ((w[1] - w[0]) / h).powi(2)).sum::<f64>() * h;
    let a = cfg.drift_coeff();
    grad + a * h * state.values.iter().map(|&u| cfg.potential.value(u)).sum::<f64>()
}

/// Prefactored `Id − dt Δ_h` and the step map.
pub struct Integrator {
    pub cfg: SpdeConfig,
    off: f64,
    inv_pivot: Vec<f64>,
    upper: Vec<f64>,
    a: f64,
    noise: f64,
    rhs: Vec<f64>,
}

impl Integrator {
    pub fn new(cfg: &SpdeConfig) -> Result<Self> {
        cfg.validate()?;
        let h = cfg.h();
        let r = cfg.dt / (h * h);
        let n = cfg.n_x;
        let (diag, off) = (1.0 + 2.0 * r, -r);
        let mut inv_pivot = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut prev = 0.0;
        for k in 0..n {
            let pivot = diag - off * prev;
            if !(pivot.abs() > 1e-300) {
                return Err(Error::InvalidParameter("singular implicit system".into()));
            }
            inv_pivot[k] = 1.0 / pivot;
            upper[k] = off / pivot;
            prev = upper[k];
        }
        let noise = if cfg.noise_on { cfg.noise_coeff() * (cfg.dt / h).sqrt() } else { 0.0 };
        Ok(Integrator { cfg: cfg.clone(), off, inv_pivot, upper, a: cfg.drift_coeff(), noise, rhs: vec![0.0; n] })
    }

    /// One step in place.
    pub fn step_in_place<R: Rng + ?Sized>(&mut self, state: &mut FieldState, rng: &mut R) -> Result<()> {
        let n = self.cfg.n_x;
        let dt = self.cfg.dt;
        for k in 0..n {
            let u = state.values[k];
            let mut b = u - dt * self.a * self.cfg.potential.d1(u);
            if self.noise > 0.0 {
                let eta: f64 = rng.sample(StandardNormal);
                b += self.noise * eta;
            }
            self.rhs[k] = b;
        }
        // boundary lift of the Dirichlet data −1, +1
        self.rhs[0] -= self.off * -1.0;
        self.rhs[n - 1] -= self.off;
        let mut prev = 0.0;
        for k in 0..n {
            self.rhs[k] = (self.rhs[k] - self.off * prev) * self.inv_pivot[k];
            prev = self.rhs[k];
        }
        state.values[n - 1] = self.rhs[n - 1];
        for k in (0..n - 1).rev() {
            state.values[k] = self.rhs[k] - self.upper[k] * state.values[k + 1];
        }
        state.time += dt;
        let max_abs = state.values.iter().fold(0.0f64, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v.abs()) });
        if max_abs > BLOW_UP {
            return Err(Error::Instability { time: state.time, max_abs });
        }
        Ok(())
    }

    pub fn step<R: Rng + ?Sized>(&mut self, state: &FieldState, rng: &mut R) -> Result<FieldState> {
        let mut next = state.clone();
        self.step_in_place(&mut next, rng)?;
        Ok(next)
    }
}

/// Solution of `Δ_h u = a F'(u)` with `u(±1) = ±1` by damped Newton.
pub fn stationary_profile(cfg: &SpdeConfig, tol: f64) -> Result<FieldState> {
    let h = cfg.h();
    let a = cfg.drift_coeff();
    let f = &cfg.potential;
    let x = cfg.nodes();
    let rate = 0.5 * (a * f.d2(1.0)).max(0.0).sqrt();
    let mut u: Vec<f64> = if rate > 0.0 { x.iter().map(|&x| (rate * x).tanh()).collect() } else { x.clone() };
    let residual = |u: &[f64]| -> Vec<f64> {
        let n = u.len();
        (0..n)
            .map(|k| {
                let l = if k == 0 { -1.0 } else { u[k - 1] };
                let r = if k + 1 == n { 1.0 } else { u[k + 1] };
                (l - 2.0 * u[k] + r) / (h * h) - a * f.d1(u[k])
            })
            .collect()
    };
    let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut res = residual(&u);
    for _ in 0..200 {
        if norm(&res) * h * h < tol {
            return Ok(FieldState { time: 0.0, values: u });
        }
        let n = u.len();
        let diag: Vec<f64> = u.iter().map(|&v| -2.0 / (h * h) - a * f.d2(v)).collect();
        let off = vec![1.0 / (h * h); n - 1];
        let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
        let du = crate::linalg::solve_tridiagonal(&off, &diag, &off, &rhs)?;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + t * b).collect();
            let r = residual(&trial);
            if norm(&r) < norm(&res) || t < 1e-6 {
                u = trial;
                res = r;
                break;
            }
            t *= 0.5;
        }
    }
    Err(Error::numeric(format!("stationary profile: Newton residual {:e} after 200 iterations", norm(&res))))
}

#[derive(Debug, Clone, Serialize)]
pub struct Preflight {
    pub interface_nodes: usize,
    pub required: usize,
}

/// Counts nodes of the deterministic stationary profile inside `|u| < 0.9`.
pub fn resolution_preflight(cfg: &SpdeConfig) -> Result<Preflight> {
    let prof = stationary_profile(cfg, 1e-12)?;
    let interface_nodes = prof.values.iter().filter(|v| v.abs() < 0.9).count();
    if interface_nodes < MIN_INTERFACE_NODES {
        return Err(Error::InvalidParameter(format!(
            "interface resolved by {interface_nodes} nodes, need at least {MIN_INTERFACE_NODES}; increase n_x"
        )));
    }
    Ok(Preflight { interface_nodes, required: MIN_INTERFACE_NODES })
}

/// Observables shared by the SPDE and the Gibbs sampler, evaluated on the
/// original scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FieldObservable {
    /// `ũ(0)`.
    Center,
    CenterSq,
    /// `ũ(−½) ũ(½)`.
    Cross,
    /// `∫_{−1}^{1} ũ²`.
    L2Sq,
    /// `dist_{L²}(u, M)` of the stretched path.
    DistL2,
    /// Fermi interface position on `[−1, 1]`.
    XiHat,
}

impl FieldObservable {
    pub fn name(self) -> &'static str {
        match self {
            FieldObservable::Center => "u0",
            FieldObservable::CenterSq => "u0_sq",
            FieldObservable::Cross => "cross",
            FieldObservable::L2Sq => "l2_sq",
            FieldObservable::DistL2 => "dist_l2",
            FieldObservable::XiHat => "xi_hat",
        }
    }

    pub fn gaussian_set() -> Vec<FieldObservable> {
        vec![FieldObservable::Center, FieldObservable::CenterSq, FieldObservable::Cross, FieldObservable::L2Sq]
    }

    fn needs_profile(self) -> bool {
        matches!(self, FieldObservable::DistL2 | FieldObservable::XiHat)
    }

    /// Value on a stretched path; `NaN` when undefined.
    pub fn eval(self, u: &PLPath, p: Option<&InstantonProfile>) -> f64 {
        match self {
            FieldObservable::Center => eval_original(u, 0.0),
            FieldObservable::CenterSq => eval_original(u, 0.0).powi(2),
            FieldObservable::Cross => eval_original(u, -0.5) * eval_original(u, 0.5),
            FieldObservable::L2Sq => u.l2_sq_interval() * u.params.epsilon.powf(u.params.gamma),
            FieldObservable::DistL2 => p.map_or(f64::NAN, |p| dist_to_m(u, p, Norm::L2)),
            FieldObservable::XiHat => {
                p.and_then(|p| fermi_project(u, p).ok()).map_or(f64::NAN, |f| to_original(&u.params, f.xi))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceSummary {
    pub name: &'static str,
    pub mean: f64,
    pub se: f64,
    pub ess: f64,
    /// Difference of last-quarter and second-quarter means in units of its SE.
    pub window_z: f64,
}

fn summarize_trace(name: &'static str, xs: &[f64]) -> TraceSummary {
    let clean: Vec<f64> = xs.iter().copied().filter(|v| v.is_finite()).collect();
    let (mean, _) = mean_var(&clean);
    let q = clean.len() / 4;
    let window_z = if q >= 40 {
        let (a, b) = (&clean[q..2 * q], &clean[3 * q..]);
        let (ma, _) = mean_var(a);
        let (mb, _) = mean_var(b);
        let se = (batch_means_se(a, 10).powi(2) + batch_means_se(b, 10).powi(2)).sqrt();
        if se > 0.0 {
            (mb - ma) / se
        } else {
            0.0
        }
    } else {
        f64::NAN
    };
    TraceSummary { name, mean, se: batch_means_se(&clean, 20), ess: effective_sample_size(&clean, 20), window_z }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySummary {
    pub n_steps: usize,
    pub final_state: FieldState,
    pub snapshots: Vec<FieldState>,
    pub observables: Vec<TraceSummary>,
    #[serde(skip)]
    pub traces: Vec<Vec<f64>>,
    /// Largest one-step increase of the Lyapunov functional (noise off only).
    pub max_lyapunov_increase: Option<f64>,
}

/// Integrates to `t_end` from `start` (default `u(x) = x`), recording
/// observables after `burn_in`.
pub fn run(
    cfg: &SpdeConfig,
    start: Option<FieldState>,
    obs: &[FieldObservable],
    profile: Option<&InstantonProfile>,
) -> Result<TrajectorySummary> {
    let mut integ = Integrator::new(cfg)?;
    if obs.iter().any(|o| o.needs_profile()) && profile.is_none() {
        return Err(Error::InvalidParameter("distance observables need an instanton profile".into()));
    }
    let params = cfg.grid_params()?;
    let mut state = start.unwrap_or_else(|| FieldState::linear(cfg));
    if state.values.len() != cfg.n_x {
        return Err(Error::InvalidParameter(format!("start has {} values, expected {}", state.values.len(), cfg.n_x)));
    }
    let mut rng: StreamRng = stream(cfg.seed, &[0x7370_6465]);
    let n_steps = cfg.n_steps();
    let burn_steps = (cfg.burn_in / cfg.dt).round() as usize;
    let mut traces = vec![Vec::new(); obs.len()];
    let mut snapshots = Vec::new();
    let track = !cfg.noise_on;
    let mut last_v = if track { lyapunov(cfg, &state) } else { 0.0 };
    let mut max_inc = f64::NEG_INFINITY;
    for k in 1..=n_steps {
        integ.step_in_place(&mut state, &mut rng)?;
        if track {
            let v = lyapunov(cfg, &state);
            max_inc = max_inc.max(v - last_v);
            last_v = v;
        }
        if k > burn_steps && (k - burn_steps) % cfg.sample_every == 0 && !obs.is_empty() {
            let path = state.to_path(params)?;
            for (t, o) in traces.iter_mut().zip(obs) {
                t.push(o.eval(&path, profile));
            }
        }
        if cfg.snapshot_every > 0 && k % cfg.snapshot_every == 0 {
            snapshots.push(state.clone());
        }
    }
    let observables = obs.iter().zip(&traces).map(|(o, t)| summarize_trace(o.name(), t)).collect();
    Ok(TrajectorySummary {
        n_steps,
        final_state: state,
        snapshots,
        observables,
        traces,
        max_lyapunov_increase: if track { Some(max_inc) } else { None },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StationarityEntry {
    pub name: &'static str,
    pub spde_mean: f64,
    pub spde_se: f64,
    pub gibbs_mean: f64,
    pub gibbs_se: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StationarityReport {
    pub entries: Vec<StationarityEntry>,
    pub max_abs_z: f64,
}

/// Compares long-run SPDE means with means over samples from the Gibbs
/// sampler (or bridge sampler when `F ≡ 0`); Gibbs standard errors use batch
/// means in sample order.
pub fn stationarity_check(
    cfg: &SpdeConfig,
    gibbs_samples: &[PLPath],
    obs: &[FieldObservable],
    profile: Option<&InstantonProfile>,
) -> Result<StationarityReport> {
    if gibbs_samples.is_empty() {
        return Err(Error::InvalidParameter("no Gibbs samples".into()));
    }
    for u in gibbs_samples {
        if u.params.epsilon != cfg.epsilon || u.params.gamma != cfg.gamma {
            return Err(Error::Domain(format!(
                "Gibbs samples use (ε, γ) = ({}, {}), SPDE uses ({}, {})",
                u.params.epsilon, u.params.gamma, cfg.epsilon, cfg.gamma
            )));
        }
    }
    let traj = run(cfg, None, obs, profile)?;
    let entries: Vec<StationarityEntry> = obs
        .iter()
        .zip(&traj.observables)
        .map(|(o, s)| {
            let g: Vec<f64> = gibbs_samples.iter().map(|u| o.eval(u, profile)).filter(|v| v.is_finite()).collect();
            let (gm, _) = mean_var(&g);
            let gse = batch_means_se(&g, 20);
            let z = (s.mean - gm) / (s.se * s.se + gse * gse).sqrt();
            StationarityEntry { name: o.name(), spde_mean: s.mean, spde_se: s.se, gibbs_mean: gm, gibbs_se: gse, z }
        })
        .collect();
    let max_abs_z = entries.iter().map(|e| e.z.abs()).fold(0.0, f64::max);
    Ok(StationarityReport { entries, max_abs_z })
}
