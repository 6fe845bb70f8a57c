//! One runner per experiment kind. Each writes its files through an
//! [`OutputDir`]; figures are emitted after the numbers.

use acg_core::energy::{spectral_report, Norm};
use acg_core::gaussian::{discretization_tails, massive_h1_tail, sample_bridge, BridgeSpec, ConcentrationReport, MassiveFieldSpec};
use acg_core::gibbs::{
    cell_count_max_z, concentration_curve, estimate_log_z, interface_stats, mcmc_chain, power_ladder, GibbsSpec, Observable,
};
use acg_core::instanton::solve_profile;
use acg_core::potential::surface_tension;
use acg_core::rng::{derive_seed, stream};
use acg_core::spde::{resolution_preflight, run as run_spde, FieldObservable};
use acg_core::stats::{effective_sample_size, mean_var};
use acg_core::{criteria, InstantonProfile, PotentialSpec, ScaleParams};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Kind};
use crate::output::{num, OutputDir};
use crate::svg::{self, Series, Style};
use crate::Failure;

const TAG_BRIDGE: u64 = 0x6272_6467;
const TAG_TAILS: u64 = 0x7461_696c;
const TAG_CHAIN: u64 = 0x6368_6e73;
const TAG_LADDER: u64 = 0x6c61_6464;
const TAG_RATES: u64 = 0x7261_7465;
const TAG_IFACE: u64 = 0x6966_6163;

/// Sample paths written verbatim by `sample-bridge`; the rest enter only the
/// node statistics.
const MAX_WRITTEN_PATHS: usize = 100;

fn potential(cfg: &ExperimentConfig) -> Result<PotentialSpec, Failure> {
    cfg.potential_spec().ok_or_else(|| Failure::Config(vec![format!("unknown potential {:?}", cfg.potential)]))
}

fn profile(spec: &PotentialSpec, tol: f64) -> Result<InstantonProfile, Failure> {
    Ok(solve_profile(spec, tol)?)
}

/// Writes the SVG unless every series is empty, in which case it warns.
fn emit_chart(out: &mut OutputDir, name: &str, title: &str, axes: (&str, &str), series: &[Series], note: Option<&str>) -> Result<(), Failure> {
    if series.iter().all(|s| s.points.is_empty()) {
        out.warn(format!("{name}: no results to plot"));
        return Ok(());
    }
    let text = svg::chart(title, axes.0, axes.1, series, note);
    Ok(out.write_bytes(name, text.as_bytes())?)
}

pub fn run(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), Failure> {
    match cfg.kind {
        Kind::Instanton => instanton(cfg, out),
        Kind::Spectrum => spectrum(cfg, out),
        Kind::SampleBridge => sample_bridge_run(cfg, out),
        Kind::SampleGibbs => sample_gibbs(cfg, out),
        Kind::Logz => logz(cfg, out),
        Kind::Rates => rates(cfg, out),
        Kind::Interface => interface(cfg, out),
        Kind::Spde => spde(cfg, out),
        Kind::Verify => verify(cfg, out),
    }
}

#[derive(Serialize)]
struct InstantonSummary {
    potential: String,
    closed_form: bool,
    c1: f64,
    c2: f64,
    surface_tension: f64,
    tail_slope: f64,
    residual: f64,
    tol: f64,
    table_len: usize,
    max_closed_form_error: Option<f64>,
}

fn instanton(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), Failure> {
    let spec = potential(cfg)?;
    let p = profile(&spec, cfg.instanton_tol)?;
    let table = p.table();
    let rows: Vec<Vec<String>> = table.iter().map(|r| r.iter().map(|v| num(*v)).collect()).collect();
    out.write_csv("profile.csv", "instanton.profile", &["s", "m", "dm", "first_integral_residual"], &rows)?;

    let closed: Vec<(f64, f64)> = table.iter().filter_map(|r| spec.closed_form_profile(r[0]).map(|m| (r[0], m))).collect();
    let max_err = (!closed.is_empty())
        .then(|| closed.iter().map(|(s, m)| (p.value(*s) - m).abs()).fold(0.0, f64::max));
    let summary = InstantonSummary {
        potential: spec.name.clone(),
        closed_form: p.closed_form,
        c1: p.c1,
        c2: p.c2,
        surface_tension: surface_tension(&spec)?,
        tail_slope: p.tail_slope(),
        residual: p.residual,
        tol: p.tol,
        table_len: p.table_len(),
        max_closed_form_error: max_err,
    };
    out.write_json("summary.json", &summary)?;

    let window = |pts: Vec<(f64, f64)>| pts.into_iter().filter(|(s, _)| s.abs() <= 8.0).collect::<Vec<_>>();
    let mut series = vec![Series { label: "solver m(s)".into(), points: window(table.iter().map(|r| (r[0], r[1])).collect()), style: Style::Line }];
    if !closed.is_empty() {
        series.push(Series { label: "closed form".into(), points: window(closed), style: Style::Dashed });
    }
    emit_chart(out, "instanton.svg", &format!("instanton profile ({})", spec.name), ("s", "m(s)"), &series, None)
}

#[derive(Serialize)]
struct SpectrumSummary {
    potential: String,
    h: f64,
    t_box: f64,
    lambda0: f64,
    lambda1: f64,
    constrained_gap: f64,
    eigvec0_alignment: f64,
    curvature_bound: f64,
    coercivity_lower: f64,
    coercivity_upper: f64,
    iterations: usize,
}

fn spectrum(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), Failure> {
    let spec = potential(cfg)?;
    let p = profile(&spec, cfg.instanton_tol)?;
    let r = spectral_report(&p, &spec, cfg.spectrum_h, cfg.spectrum_t_box)?;
    out.write_json(
        "spectrum.json",
        &SpectrumSummary {
            potential: spec.name.clone(),
            h: r.h,
            t_box: r.t_box,
            lambda0: r.lambda0,
            lambda1: r.lambda1,
            constrained_gap: r.constrained_gap,
            eigvec0_alignment: r.eigvec0_alignment,
            curvature_bound: r.curvature_bound,
            coercivity_lower: r.coercivity_lower,
            coercivity_upper: r.coercivity_upper,
            iterations: r.iterations,
        },
    )?;
    let rows: Vec<Vec<String>> = r.nodes.iter().zip(&r.eigvec0).map(|(s, v)| vec![num(*s), num(*v)]).collect();
    out.write_csv("eigvec0.csv", "spectrum.eigvec0", &["s", "v"], &rows)?;
    Ok(())
}

#[derive(Serialize)]
struct BridgeSummary {
    params: ScaleParams,
    samples: usize,
    refine_m: usize,
    kappa: f64,
    expected_l2_sq: f64,
    sigma_sq: f64,
    bounds: Vec<BoundSummary>,
}

#[derive(Serialize)]
struct BoundSummary {
    bound: &'static str,
    dominated: bool,
    violations: usize,
    mean_sq: f64,
}

fn sample_bridge_run(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), Failure> {
    let params = cfg.scale_params(cfg.epsilon)?;
    let spec = BridgeSpec::new(params);
    let seed = derive_seed(cfg.seed, &[TAG_BRIDGE]);
    out.seed("bridge", seed);
    let n = cfg.bridge_samples;
    let paths: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| sample_bridge(&spec, &mut stream(seed, &[i as u64])).values)
        .collect();

    let nodes = params.nodes();
    let mut node_rows = Vec::with_capacity(nodes.len());
    for (k, s) in nodes.iter().enumerate() {
        let col: Vec<f64> = paths.iter().map(|p| p[k]).collect();
        let (m, v) = mean_var(&col);
        node_rows.push(vec![num(*s), num(m), num(v), num(spec.mean(*s)), num(spec.kernel(*s, *s))]);
    }
    out.write_csv("nodes.csv", "bridge.nodes", &["s", "mean", "variance", "exact_mean", "exact_variance"], &node_rows)?;

    let mut header = vec!["sample".to_string()];
    header.extend((0..nodes.len()).map(|k| format!("u{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = paths
        .iter()
        .take(MAX_WRITTEN_PATHS)
        .enumerate()
        .map(|(i, p)| std::iter::once(i.to_string()).chain(p.iter().map(|v| num(*v))).collect())
        .collect();
    out.write_csv("samples.csv", "bridge.samples", &header, &rows)?;

    let tails_seed = derive_seed(cfg.seed, &[TAG_TAILS]);
    out.seed("tails", tails_seed);
    let tails = discretization_tails(&params, n, cfg.bridge_refine_m, tails_seed)?;
    let massive = massive_h1_tail(&MassiveFieldSpec::new(params, cfg.bridge_kappa)?, n, tails_seed);
    let reports = [&tails.whole_l2, &tails.short_l2, &tails.whole_linf, &massive];
    let mut rows = Vec::new();
    for r in reports {
        for i in 0..r.r_grid.len() {
            rows.push(vec![
                r.bound_name.label().to_string(),
                num(r.r_grid[i]),
                num(r.empirical_p[i]),
                num(r.theoretical_p[i]),
                r.n_samples.to_string(),
            ]);
        }
    }
    out.write_csv("concentration.csv", "bridge.concentration", &["bound", "r", "empirical_p", "bound_p", "n"], &rows)?;
    out.write_json(
        "summary.json",
        &BridgeSummary {
            params,
            samples: n,
            refine_m: cfg.bridge_refine_m,
            kappa: cfg.bridge_kappa,
            expected_l2_sq: tails.expected_l2_sq,
            sigma_sq: tails.sigma_sq,
            bounds: reports
                .iter()
                .map(|r| BoundSummary {
                    bound: r.bound_name.label(),
                    dominated: r.dominated(),
                    violations: r.violations().len(),
                    mean_sq: r.mean_sq,
                })
                .collect(),
        },
    )?;
    for r in reports {
        domination_chart(out, r)?;
    }
    Ok(())
}

/// Empirical tail vs bound, on a log10 scale.
fn domination_chart(out: &mut OutputDir, r: &ConcentrationReport) -> Result<(), Failure> {
    let log = |p: &[f64]| -> Vec<(f64, f64)> {
        r.r_grid.iter().zip(p).filter(|(_, p)| **p > 0.0).map(|(x, p)| (*x, p.min(1.0).log10())).collect()
    };
    let series = [
        Series { label: "empirical".into(), points: log(&r.empirical_p), style: Style::Points },
        Series { label: "bound".into(), points: log(&r.theoretical_p), style: Style::Line },
    ];
    let name = format!("concentration_{}.svg", r.bound_name.label());
    emit_chart(out, &name, &format!("tail bound: {}", r.bound_name.label()), ("r", "log10 P(X ≥ r)"), &series, None)
}

#[derive(Serialize)]
struct GibbsSummary {
    params: ScaleParams,
    potential: String,
    seed: u64,
    report: acg_core::gibbs::GibbsReport,
}

fn sample_gibbs(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), Failure> {
    let spec_f = potential(cfg)?;
    let params = cfg.scale_params(cfg.epsilon)?;
    let p = profile(&spec_f, cfg.instanton_tol)?;
    let spec = GibbsSpec::new(params, spec_f);
    let seed = derive_seed(cfg.seed, &[TAG_CHAIN]);
    out.seed("chain", seed);
    let obs = [Observable::Phi, Observable::Energy, Observable::Center, Observable::DistL2];
    let res = mcmc_chain(&spec, &cfg.chain_config(seed), cfg.chain.chains, &obs, Some(&p), false)?;
    out.write_json("summary.json", &GibbsSummary { params, potential: spec.potential.label(), seed, report: res.report.clone() })?;
    let mut header = vec!["index"];
    header.extend(obs.iter().map(|o| o.name()));
    let len = res.traces.first().map_or(0, Vec::len);
    let rows: Vec<Vec<String>> = (0..len)
        .map(|i| std::iter::once(i.to_string()).chain(res.traces.iter().map(|t| num(t[i]))).collect())
        .collect();
    out.write_csv("traces.csv", "gibbs.traces", &header, &rows)?;
    Ok(())
}

#[derive(Serialize)]
struct LogzSummary {
    potential: String,
    surface_tension: f64,
    ladder: Vec<f64>,
    estimates: Vec<LogzEntry>,
}

#[derive(Serialize)]
struct LogzEntry {
    params: ScaleParams,
    estimate: acg_core::gibbs::ZEstimate,
}

fn logz(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), Failure> {
    let spec_f = potential(cfg)?;
    let c_star = surface_tension(&spec_f)?;
    let ladder = power_ladder(cfg.ladder_rungs, cfg.ladder_power);
    let mut entries = Vec::new();
    for (j, eps) in cfg.sweep(&cfg.ladder_epsilons).into_iter().enumerate() {
        let params = cfg.scale_params(eps)?;
        let seed = derive_seed(cfg.seed, &[TAG_LADDER, j as u64]);
        out.seed(format!("ladder eps={eps}"), seed);
        let est = estimate_log_z(&GibbsSpec::new(params, spec_f.clone()), &ladder, &cfg.chain_config(seed), cfg.chain.chains)?;
        entries.push(LogzEntry { params, estimate: est });
    }
    let rows: Vec<Vec<String>> = entries
        .iter()
        .map(|e| {
            let z = &e.estimate;
            vec![num(e.params.epsilon), e.params.n.to_string(), num(z.log_z), num(z.se), num(z.eps_log_z), num(z.eps_log_z + c_star)]
        })
        .collect();
    out.write_csv("logz.csv", "logz.sweep", &["epsilon", "n", "log_z", "se", "eps_log_z", "gap_to_minus_c_star"], &rows)?;
    let points: Vec<(f64, f64)> = entries.iter().map(|e| (e.params.epsilon, e.estimate.eps_log_z)).collect();
    let reference: Vec<(f64, f64)> = if points.is_empty() {
        Vec::new()
    } else {
        vec![(0.0, -c_star), (points.iter().map(|p| p.0).fold(0.0, f64::max), -c_star)]
    };
    out.write_json("logz.json", &LogzSummary { potential: spec_f.name.clone(), surface_tension: c_star, ladder, estimates: entries })?;
    let series = [
        Series { label: "ε log Ẑ".into(), points, style: Style::Points },
        Series { label: "−C_*".into(), points: reference, style: Style::Dashed },
    ];
    emit_chart(out, "logz.svg", "normalizer scaling", ("ε", "ε log Z"), &series, None)
}

#[derive(Serialize)]
struct RatesSummary {
    potential: String,
    cutoff: f64,
    coercivity_lower: f64,
    curves: Vec<acg_core::gibbs::RateCurve>,
}

fn rates(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), Failure> {
    let spec_f = potential(cfg)?;
    let p = profile(&spec_f, cfg.instanton_tol)?;
    let c0 = spectral_report(&p, &spec_f, cfg.spectrum_h, cfg.spectrum_t_box)?.coercivity_lower;
    let epsilons = cfg.sweep(&cfg.rates_epsilons);
    let mut specs = Vec::new();
    for &eps in &epsilons {
        specs.push(GibbsSpec::with_cutoff(cfg.scale_params(eps)?, spec_f.clone(), cfg.rates_cutoff)?);
    }
    let seed = derive_seed(cfg.seed, &[TAG_RATES]);
    out.seed("rates", seed);
    let mut curves = Vec::new();
    for name in &cfg.rates_norms {
        let norm = if name == "linf" { Norm::Linf } else { Norm::L2 };
        curves.push(concentration_curve(&specs, &cfg.rates_deltas, norm, &cfg.chain_config(seed), cfg.chain.chains, &p)?);
    }
    let mut rows = Vec::new();
    for c in &curves {
        for e in &c.entries {
            rows.push(vec![
                norm_name(c.norm).to_string(),
                num(e.epsilon),
                num(e.delta),
                e.exceed.to_string(),
                e.n.to_string(),
                num(e.p_hat),
                num(e.se),
                num(e.eps_log_p),
                e.upper_bound.to_string(),
            ]);
        }
    }
    out.write_csv(
        "rates.csv",
        "rates.curve",
        &["norm", "epsilon", "delta", "exceed", "n", "p_hat", "se", "eps_log_p", "upper_bound"],
        &rows,
    )?;
    out.write_json("rates.json", &RatesSummary { potential: spec_f.name.clone(), cutoff: cfg.rates_cutoff, coercivity_lower: c0, curves: curves.clone() })?;

    for c in &curves {
        let mut series: Vec<Series> = epsilons
            .iter()
            .map(|&eps| Series {
                label: format!("ε = {eps}"),
                points: c.entries.iter().filter(|e| e.epsilon == eps && e.eps_log_p.is_finite()).map(|e| (e.delta * e.delta, e.eps_log_p)).collect(),
                style: Style::Points,
            })
            .collect();
        let d2max = cfg.rates_deltas.iter().map(|d| d * d).fold(0.0, f64::max);
        series.push(Series { label: "−ĉ₀δ²".into(), points: vec![(0.0, 0.0), (d2max, -c0 * d2max)], style: Style::Dashed });
        let name = format!("rates_{}.svg", norm_name(c.norm));
        emit_chart(out, &name, &format!("deviation rates ({})", norm_name(c.norm)), ("δ²", "ε log p̂"), &series, None)?;
    }
    Ok(())
}

fn norm_name(n: Norm) -> &'static str {
    match n {
        Norm::L2 => "l2",
        Norm::Linf => "linf",
        Norm::H1 => "h1",
    }
}

#[derive(Serialize)]
struct InterfaceEntry {
    params: ScaleParams,
    max_shift: usize,
    acceptance_rate: f64,
    shift_acceptance: f64,
    xi_ess: f64,
    n_samples: usize,
    n_no_interface: usize,
    n_fallback: usize,
    mean: f64,
    variance: f64,
    trim: f64,
    ks_trimmed: f64,
    n_trimmed: usize,
    cell_counts: Vec<usize>,
    cell_max_z: f64,
}

fn interface(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), Failure> {
    let spec_f = potential(cfg)?;
    let p = profile(&spec_f, cfg.instanton_tol)?;
    let mut entries = Vec::new();
    let mut xi_rows = Vec::new();
    let mut hists = Vec::new();
    for (j, eps) in cfg.sweep(&cfg.interface_epsilons).into_iter().enumerate() {
        let params = cfg.scale_params(eps)?;
        let mut chain = cfg.chain_config(derive_seed(cfg.seed, &[TAG_IFACE, j as u64]));
        if chain.max_shift == 0 {
            chain.max_shift = params.n;
        }
        out.seed(format!("interface eps={eps}"), chain.seed);
        let res = mcmc_chain(&GibbsSpec::new(params, spec_f.clone()), &chain, cfg.chain.chains, &[Observable::Phi], None, true)?;
        let st = interface_stats(
            &res.samples,
            &p,
            cfg.interface_smear_halfwidth,
            cfg.interface_trim,
            cfg.interface_cell_nodes,
            cfg.interface_cell_halfwidth,
        );
        xi_rows.extend(st.xi_hat.iter().map(|x| vec![num(eps), num(*x)]));
        let n = res.samples.len();
        entries.push(InterfaceEntry {
            params,
            max_shift: chain.max_shift,
            acceptance_rate: res.report.acceptance_rate,
            shift_acceptance: res.report.shift_acceptance,
            xi_ess: if st.xi_hat.len() >= 40 { effective_sample_size(&st.xi_hat, 20) } else { 0.0 },
            n_samples: n,
            n_no_interface: st.n_no_interface,
            n_fallback: st.n_fallback,
            mean: st.mean,
            variance: st.variance,
            trim: st.trim,
            ks_trimmed: st.ks_trimmed,
            n_trimmed: st.n_trimmed,
            cell_max_z: cell_count_max_z(&st.cell_counts, n),
            cell_counts: st.cell_counts.clone(),
        });
        hists.push((eps, st));
    }
    out.write_json("interface.json", &entries)?;
    out.write_csv("xi.csv", "interface.xi", &["epsilon", "xi_hat"], &xi_rows)?;
    for (eps, st) in hists {
        let name = format!("xi_hist_eps{eps}.svg");
        if st.xi_hat.is_empty() {
            out.warn(format!("{name}: no interface positions to plot"));
            continue;
        }
        let note = format!("KS on [−{t}, {t}] = {:.4}, n = {}", st.ks_trimmed, st.n_trimmed, t = st.trim);
        let text = svg::histogram(&format!("interface position, ε = {eps}"), "ξ̂", &st.xi_hat, 20, -1.0, 1.0, 0.5, &note);
        out.write_bytes(&name, text.as_bytes())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SpdeSummary {
    config: acg_core::spde::SpdeConfig,
    interface_nodes: Option<usize>,
    n_steps: usize,
    final_time: f64,
    max_lyapunov_increase: Option<f64>,
    observables: Vec<acg_core::spde::TraceSummary>,
}

fn spde(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), Failure> {
    let sc = cfg.spde_config().ok_or_else(|| Failure::Config(vec![format!("unknown potential {:?}", cfg.potential)]))?;
    // the free field has no interface to resolve
    let interface_nodes = if sc.potential.name == "zero" { None } else { Some(resolution_preflight(&sc)?.interface_nodes) };
    out.seed("spde", sc.seed);
    let obs = FieldObservable::gaussian_set();
    let res = run_spde(&sc, None, &obs, None)?;
    let x = sc.nodes();
    let mut rows = Vec::new();
    for s in res.snapshots.iter().chain([&res.final_state]) {
        for (xi, u) in x.iter().zip(&s.values) {
            rows.push(vec![num(s.time), num(*xi), num(*u)]);
        }
    }
    out.write_csv("snapshots.csv", "spde.snapshots", &["t", "x", "u"], &rows)?;
    let len = res.traces.first().map_or(0, Vec::len);
    let mut header = vec!["index"];
    header.extend(obs.iter().map(|o| o.name()));
    let trows: Vec<Vec<String>> = (0..len)
        .map(|i| std::iter::once(i.to_string()).chain(res.traces.iter().map(|t| num(t[i]))).collect())
        .collect();
    out.write_csv("traces.csv", "spde.traces", &header, &trows)?;
    out.write_json(
        "summary.json",
        &SpdeSummary {
            config: sc.clone(),
            interface_nodes,
            n_steps: res.n_steps,
            final_time: res.final_state.time,
            max_lyapunov_increase: res.max_lyapunov_increase,
            observables: res.observables,
        },
    )?;
    Ok(())
}

fn verify(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), Failure> {
    let outcomes: Vec<criteria::Outcome> = cfg
        .verify_criteria
        .iter()
        .map(|&id| {
            let o = criteria::run(id);
            println!("{}", o.line());
            o
        })
        .collect();
    out.write_json("verify.json", &outcomes)?;
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id.to_string()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Acceptance(format!("criteria failed: {}", failed.join(", "))))
    }
}
