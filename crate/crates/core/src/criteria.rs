//! End-to-end checks with fixed tolerances and runtime budgets, shared by the
//! acceptance test target and the `verify` command.

use std::time::Instant;

use serde::Serialize;

use crate::energy::{spectral_report, Norm, SpectralReport};
use crate::error::Result;
use crate::gaussian::{
    discretization_tails, log_density, log_normalizer_determinant, log_normalizer_kernels, massive_h1_tail,
    sample_bridge, BridgeSpec, MassiveFieldSpec,
};
use crate::gibbs::{
    cell_count_max_z, concentration_curve, direct_small_n_oracle, estimate_log_z, interface_stats, mcmc_chain,
    power_ladder, ChainConfig, GibbsSpec, Observable,
};
use crate::instanton::solve_profile;
use crate::params::ScaleParams;
use crate::path::{Boundary, PLPath};
use crate::potential::{surface_tension_quadrature, PotentialSpec};
use crate::quadrature::gl20;
use crate::rng::stream;
use crate::spde::{stationarity_check, FieldObservable, SpdeConfig};
use crate::stats::{effective_sample_size, mean_var};

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {}: {} ({:.1} s of {:.0} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.seconds,
            self.budget
        )
    }
}

pub const ALL: [u8; 11] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

/// Criteria that finish within about a minute each.
pub const QUICK: [u8; 6] = [1, 2, 3, 4, 5, 6];

const TITLES: [&str; 11] = [
    "surface tension",
    "instanton vs tanh",
    "spectrum of the linearized operator",
    "bridge density normalization",
    "bridge law and refinement error",
    "concentration-bound domination",
    "Gibbs sampler vs quadrature oracle",
    "normalizer scaling trend",
    "concentration rate trend",
    "uniform interface law",
    "SPDE vs Gibbs stationarity",
];

const BUDGETS: [f64; 11] = [1.0, 5.0, 30.0, 30.0, 120.0, 300.0, 300.0, 1200.0, 1800.0, 1800.0, 1800.0];

/// Runs criterion `id`; errors count as failures.
pub fn run(id: u8) -> Outcome {
    let t = Instant::now();
    let res = match id {
        1 => surface_tension_check(),
        2 => instanton_check(),
        3 => spectrum_check(),
        4 => density_check(),
        5 => bridge_law_check(),
        6 => domination_check(),
        7 => oracle_check(),
        8 => z_trend_check(),
        9 => rate_trend_check(),
        10 => interface_check(),
        11 => spde_check(),
        _ => Ok((false, format!("unknown criterion {id}"))),
    };
    let seconds = t.elapsed().as_secs_f64();
    let idx = (id.clamp(1, 11) - 1) as usize;
    let budget = BUDGETS[idx];
    let (pass, mut detail) = res.unwrap_or_else(|e| (false, format!("error: {e}")));
    if seconds > budget {
        detail.push_str("; over budget");
    }
    Outcome { id, title: TITLES[idx], pass: pass && seconds <= budget, detail, seconds, budget }
}

fn surface_tension_check() -> Result<(bool, String)> {
    let c = surface_tension_quadrature(&PotentialSpec::quartic())?;
    let err = (c - 4.0 / 3.0).abs();
    Ok((err <= 1e-10, format!("C_* = {c:.15}, |C_* − 4/3| = {err:.2e} (tol 1e-10)")))
}

fn instanton_check() -> Result<(bool, String)> {
    let p = solve_profile(&PotentialSpec::quartic(), 1e-10)?;
    let err = (0..=16_000).map(|i| -8.0 + i as f64 * 1e-3).map(|s| (p.value(s) - s.tanh()).abs()).fold(0.0, f64::max);
    Ok((err <= 1e-8, format!("sup |m − tanh| on [−8, 8] = {err:.2e} (tol 1e-8)")))
}

fn quartic_spectrum(h: f64) -> Result<SpectralReport> {
    let p = solve_profile(&PotentialSpec::quartic(), 1e-10)?;
    spectral_report(&p, &PotentialSpec::quartic(), h, 20.0)
}

fn spectrum_check() -> Result<(bool, String)> {
    let r = quartic_spectrum(0.01)?;
    let fine = quartic_spectrum(0.002)?;
    let rel = (r.constrained_gap - fine.constrained_gap).abs() / fine.constrained_gap;
    let pass = r.lambda0.abs() <= 1e-3 && r.eigvec0_alignment >= 0.999 && rel <= 0.05;
    Ok((
        pass,
        format!(
            "λ₀ = {:.2e}, alignment {:.6}, gap {:.5} vs fine-mesh {:.5} (rel {:.1e}, tol 5%; exact 3)",
            r.lambda0, r.eigvec0_alignment, r.constrained_gap, fine.constrained_gap, rel
        ),
    ))
}

fn density_check() -> Result<(bool, String)> {
    let params = ScaleParams::with_nodes(0.5, 0.3, 2)?;
    let spec = BridgeSpec::new(params);
    let rule = gl20();
    let axes: Vec<Vec<(f64, f64)>> = (1..4)
        .map(|i| {
            let s = params.node(i);
            let sd = spec.kernel(s, s).sqrt();
            let (a, b) = (spec.mean(s) - 9.0 * sd, spec.mean(s) + 9.0 * sd);
            let h = (b - a) / 6.0;
            (0..6).flat_map(|k| rule.mapped(a + k as f64 * h, a + (k + 1) as f64 * h).collect::<Vec<_>>()).collect()
        })
        .collect();
    let mut total = 0.0;
    for &(x, wx) in &axes[0] {
        for &(y, wy) in &axes[1] {
            for &(z, wz) in &axes[2] {
                let u = PLPath::from_interior(params, &[x, y, z], Boundary::Kink)?;
                total += wx * wy * wz * log_density(&spec, &u)?.exp();
            }
        }
    }
    let mut worst: f64 = 0.0;
    for n in 1..=8 {
        let p = ScaleParams::with_nodes(0.2, 0.3, n)?;
        worst = worst.max((log_normalizer_kernels(&p) - log_normalizer_determinant(&p)?).abs());
    }
    let mass_err = (total - 1.0).abs();
    Ok((
        mass_err <= 1e-6 && worst <= 1e-10,
        format!("|∫ density − 1| = {mass_err:.2e} (tol 1e-6); max |log C_det − log C_kernels| over N ≤ 8 = {worst:.2e} (tol 1e-10)"),
    ))
}

fn bridge_law_check() -> Result<(bool, String)> {
    let params = ScaleParams::with_nodes(0.1, 0.4, 16)?;
    let spec = BridgeSpec::new(params);
    let mut rng = stream(11, &[0x6272]);
    let center = params.n;
    let xs: Vec<f64> = (0..100_000).map(|_| sample_bridge(&spec, &mut rng).values[center]).collect();
    let (_, var) = mean_var(&xs);
    let target = 0.1f64.powf(0.6) / 2.0;
    let se = target * (2.0 / (xs.len() - 1) as f64).sqrt();
    let tails = discretization_tails(&params, 100_000, 8, 12)?;
    let rel = (tails.whole_l2.mean_sq - tails.expected_l2_sq).abs() / tails.expected_l2_sq;
    let pass = (var - target).abs() <= 3.0 * se && rel <= 0.05;
    Ok((
        pass,
        format!(
            "Var u(0) = {var:.6} vs {target:.6} ({:.2} SE, tol 3); E‖u − u^N‖² = {:.5e} vs {:.5e} (rel {rel:.2e}, tol 5%)",
            (var - target) / se,
            tails.whole_l2.mean_sq,
            tails.expected_l2_sq
        ),
    ))
}

fn domination_check() -> Result<(bool, String)> {
    let params = ScaleParams::with_nodes(0.1, 0.4, 16)?;
    let tails = discretization_tails(&params, 100_000, 8, 21)?;
    let massive = massive_h1_tail(&MassiveFieldSpec::new(params, 1.0)?, 100_000, 22);
    let reports = [&tails.whole_l2, &tails.short_l2, &tails.whole_linf, &massive];
    let detail = reports
        .iter()
        .map(|r| format!("{} {} violations", r.bound_name.label(), r.violations().len()))
        .collect::<Vec<_>>()
        .join(", ");
    Ok((reports.iter().all(|r| r.dominated()), format!("{detail} (10-point grids, 1e5 samples, 3 SE)")))
}

fn oracle_check() -> Result<(bool, String)> {
    let prof = solve_profile(&PotentialSpec::quartic(), 1e-8)?;
    let spec = GibbsSpec::new(ScaleParams::with_nodes(0.5, 0.4, 2)?, PotentialSpec::quartic());
    let oracle = direct_small_n_oracle(&spec, 10, Some(&prof))?;
    let cfg = ChainConfig { n_steps: 20_000, burn_in: 2_000, seed: 71, ..Default::default() };
    let z = estimate_log_z(&spec, &power_ladder(16, 2.0), &cfg, 2)?;
    let z_rel = (z.log_z - oracle.log_z).abs() / oracle.log_z.abs();
    let ccfg = ChainConfig { n_steps: 60_000, burn_in: 5_000, seed: 72, ..Default::default() };
    let out = mcmc_chain(&spec, &ccfg, 2, &[Observable::Phi, Observable::Center, Observable::DistL2], Some(&prof), false)?;
    let targets = [oracle.mean_phi, oracle.mean_center, oracle.mean_dist_l2.unwrap_or(f64::NAN)];
    let zs: Vec<f64> = out.report.observables.iter().zip(targets).map(|(o, t)| (o.mean - t) / o.se).collect();
    let pass = z_rel <= 0.02 && zs.iter().all(|z| z.abs() <= 3.0);
    Ok((
        pass,
        format!(
            "log Z {:.5} vs oracle {:.5} (rel {z_rel:.1e}, tol 2%); z-scores Φ {:.2}, u(0) {:.2}, dist_L2 {:.2} (tol 3)",
            z.log_z, oracle.log_z, zs[0], zs[1], zs[2]
        ),
    ))
}

/// `ε` ladder shared by the normalizer and rate trends.
pub const TREND_LADDER: [f64; 5] = [0.4, 0.3, 0.2, 0.15, 0.1];

fn trend_params(eps: f64) -> Result<ScaleParams> {
    ScaleParams::new(eps, 0.3, 0.1, 0.5, None)
}

fn z_trend_check() -> Result<(bool, String)> {
    let mut vals = Vec::new();
    for (j, &eps) in TREND_LADDER.iter().enumerate() {
        let spec = GibbsSpec::new(trend_params(eps)?, PotentialSpec::quartic());
        let cfg = ChainConfig { n_steps: 30_000, burn_in: 3_000, seed: 80 + j as u64, ..Default::default() };
        let z = estimate_log_z(&spec, &power_ladder(32, 3.0), &cfg, 2)?;
        vals.push((z.eps_log_z, eps * z.se));
    }
    let monotone = vals.windows(2).all(|w| w[1].0 >= w[0].0);
    let gap = (vals.last().unwrap().0 + 4.0 / 3.0).abs();
    let list = vals.iter().map(|(v, s)| format!("{v:.3}±{s:.3}")).collect::<Vec<_>>().join(", ");
    Ok((
        monotone && gap < 0.35,
        format!("ε log Ẑ along ε = 0.4..0.1: [{list}]; nondecreasing {monotone}; terminal gap to −4/3 {gap:.3} (tol 0.35)"),
    ))
}

fn rate_trend_check() -> Result<(bool, String)> {
    let c0 = quartic_spectrum(0.01)?.coercivity_lower;
    let prof = solve_profile(&PotentialSpec::quartic(), 1e-8)?;
    let specs: Vec<GibbsSpec> = TREND_LADDER
        .iter()
        .map(|&e| GibbsSpec::with_cutoff(trend_params(e)?, PotentialSpec::quartic(), 2.0))
        .collect::<Result<_>>()?;
    let delta = 0.5;
    let bound = -c0 * delta * delta / 2.0;
    let cfg = ChainConfig { n_steps: 55_000, burn_in: 5_000, thin: 5, seed: 90, ..Default::default() };
    let mut pass = true;
    let mut parts = Vec::new();
    for norm in [Norm::L2, Norm::Linf] {
        let curve = concentration_curve(&specs, &[delta], norm, &cfg, 1, &prof)?;
        let v: Vec<f64> = curve.entries.iter().map(|e| e.eps_log_p).collect();
        let decreasing = v.windows(2).all(|w| w[1] < w[0]);
        let terminal = *v.last().unwrap() <= bound;
        pass &= decreasing && terminal;
        parts.push(format!(
            "{norm:?}: [{}] strictly decreasing {decreasing}, terminal ≤ {bound:.4} {terminal}",
            v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ")
        ));
    }
    Ok((pass, format!("δ = {delta}; {}", parts.join("; "))))
}

fn interface_check() -> Result<(bool, String)> {
    let prof = solve_profile(&PotentialSpec::quartic(), 1e-8)?;
    let mut ks = Vec::new();
    let mut pass = true;
    let mut parts = Vec::new();
    for (j, eps) in [0.05, 0.02].into_iter().enumerate() {
        let params = ScaleParams::auto(eps, 0.6)?;
        let spec = GibbsSpec::new(params, PotentialSpec::quartic());
        let cfg = ChainConfig {
            n_steps: 400_000,
            burn_in: 10_000,
            thin: 20,
            max_shift: params.n,
            seed: 100 + j as u64,
            ..Default::default()
        };
        let out = mcmc_chain(&spec, &cfg, 1, &[Observable::Phi], Some(&prof), true)?;
        let st = interface_stats(&out.samples, &prof, 0.05, 0.8, 4, 0.5);
        let ess = effective_sample_size(&st.xi_hat, 20);
        let z = cell_count_max_z(&st.cell_counts, out.samples.len());
        pass &= ess >= 5_000.0 && z <= 3.0;
        ks.push(st.ks_trimmed);
        parts.push(format!(
            "ε={eps}: KS {:.4}, ESS {ess:.0}, mean {:.3}, var {:.3}, cells {:?} (max {z:.1} SE)",
            st.ks_trimmed, st.mean, st.variance, st.cell_counts
        ));
    }
    pass &= ks[1] <= 0.05 && ks[1] < ks[0];
    Ok((pass, parts.join("; ")))
}

fn spde_check() -> Result<(bool, String)> {
    let prof = solve_profile(&PotentialSpec::quartic(), 1e-8)?;

    let free = SpdeConfig { t_end: 300.0, burn_in: 2.0, seed: 110, ..SpdeConfig::new(0.3, 0.3, 31, PotentialSpec::zero()) };
    let bridge = BridgeSpec::new(free.grid_params()?);
    let mut rng = stream(111, &[]);
    let samples: Vec<PLPath> = (0..20_000).map(|_| sample_bridge(&bridge, &mut rng)).collect();
    let t = Instant::now();
    let free_rep = stationarity_check(&free, &samples, &FieldObservable::gaussian_set(), None)?;
    let free_secs = t.elapsed().as_secs_f64();

    let base = SpdeConfig::new(0.3, 0.3, 47, PotentialSpec::quartic());
    let cfg = SpdeConfig { t_end: 2000.0, burn_in: 5.0, dt: base.dt / 4.0, sample_every: 400, seed: 112, ..base };
    let params = cfg.grid_params()?;
    let spec = GibbsSpec::new(params, PotentialSpec::quartic());
    let ccfg = ChainConfig { n_steps: 420_000, burn_in: 20_000, thin: 20, max_shift: params.n, seed: 113, ..Default::default() };
    let out = mcmc_chain(&spec, &ccfg, 1, &[Observable::Phi], None, true)?;
    let mut obs = FieldObservable::gaussian_set();
    obs.push(FieldObservable::DistL2);
    let rep = stationarity_check(&cfg, &out.samples, &obs, Some(&prof))?;
    let fmt = |r: &crate::spde::StationarityReport| {
        r.entries.iter().map(|e| format!("{} {:.2}", e.name, e.z)).collect::<Vec<_>>().join(", ")
    };
    let pass = free_rep.max_abs_z < 4.0 && free_secs < 300.0 && rep.max_abs_z < 4.0;
    Ok((pass, format!("F≡0: [{}] in {free_secs:.0} s; quartic: [{}] (tol |z| < 4)", fmt(&free_rep), fmt(&rep))))
}
