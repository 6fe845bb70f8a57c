use acg_core::gaussian::{sample_bridge, BridgeSpec};
use acg_core::rng::stream;
use acg_core::spde::*;
use acg_core::{Error, PotentialSpec, ScaleParams};

fn quiet(eps: f64, gamma: f64, n_x: usize, f: PotentialSpec) -> SpdeConfig {
    SpdeConfig { noise_on: false, ..SpdeConfig::new(eps, gamma, n_x, f) }
}

#[test]
fn heat_flow_relaxes_to_the_line() {
    let cfg = SpdeConfig { t_end: 50.0, ..quiet(0.3, 0.3, 31, PotentialSpec::zero()) };
    let start = FieldState { time: 0.0, values: cfg.nodes().iter().map(|x| x + 0.7 * (3.0 * x).sin() + 0.4).collect() };
    let out = run(&cfg, Some(start), &[], None).unwrap();
    let err = cfg.nodes().iter().zip(&out.final_state.values).map(|(x, u)| (x - u).abs()).fold(0.0, f64::max);
    assert!(err < 1e-8, "{err:e}");
    assert!((out.final_state.time - 50.0).abs() < 1e-6);
}

#[test]
fn stationary_profile_is_a_fixed_point() {
    let cfg = quiet(0.3, 0.3, 63, PotentialSpec::quartic());
    let prof = stationary_profile(&cfg, 1e-13).unwrap();
    let mut integ = Integrator::new(&cfg).unwrap();
    let mut rng = stream(1, &[]);
    let next = integ.step(&prof, &mut rng).unwrap();
    let drift = prof.values.iter().zip(&next.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(drift <= 1e-10, "{drift:e}");
    // odd symmetry of the quartic kink
    let n = prof.values.len();
    for k in 0..n {
        assert!((prof.values[k] + prof.values[n - 1 - k]).abs() < 1e-10);
    }
}

#[test]
fn stationary_profile_converges_at_second_order() {
    let prof = |n_x| stationary_profile(&quiet(0.3, 0.3, n_x, PotentialSpec::quartic()), 1e-14).unwrap().values;
    let (a, b, c) = (prof(31), prof(63), prof(127));
    let d1 = (0..31).map(|k| (a[k] - b[2 * k + 1]).abs()).fold(0.0, f64::max);
    let d2 = (0..63).map(|k| (b[k] - c[2 * k + 1]).abs()).fold(0.0, f64::max);
    let ratio = d1 / d2;
    assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
}

#[test]
fn deterministic_flow_dissipates_energy() {
    let cfg = SpdeConfig { t_end: 2.0, ..quiet(0.3, 0.3, 31, PotentialSpec::quartic()) };
    let start = FieldState { time: 0.0, values: cfg.nodes().iter().map(|x| (5.0 * x).sin() + x).collect() };
    let v0 = lyapunov(&cfg, &start);
    let out = run(&cfg, Some(start), &[], None).unwrap();
    assert!(out.max_lyapunov_increase.unwrap() <= 1e-12 * v0, "{:?}", out.max_lyapunov_increase);
    assert!(lyapunov(&cfg, &out.final_state) < v0);
}

#[test]
fn boundary_values_are_exact() {
    let cfg = SpdeConfig { t_end: 0.5, snapshot_every: 100, ..SpdeConfig::new(0.3, 0.3, 31, PotentialSpec::quartic()) };
    let out = run(&cfg, None, &[], None).unwrap();
    assert!(!out.snapshots.is_empty());
    for s in out.snapshots.iter().chain([&out.final_state]) {
        let full = s.full();
        assert_eq!(full[0], -1.0);
        assert_eq!(full[full.len() - 1], 1.0);
        assert_eq!(s.eval(-1.0), -1.0);
        assert_eq!(s.eval(1.0), 1.0);
    }
}

#[test]
fn blow_up_is_reported_with_time() {
    let cfg = quiet(0.3, 0.3, 31, PotentialSpec::quartic());
    let start = FieldState { time: 0.0, values: vec![30.0; 31] };
    match run(&cfg, Some(start), &[], None) {
        Err(Error::Instability { time, max_abs }) => {
            assert!(time > 0.0 && time < 0.01);
            assert!(max_abs > BLOW_UP);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn config_lists_all_violations() {
    let cfg = SpdeConfig { dt: 1.0, t_end: -1.0, ..SpdeConfig::new(0.3, 0.7, 32, PotentialSpec::quartic()) };
    match cfg.validate() {
        Err(Error::Constraint(v)) => assert!(v.len() >= 4, "{v:?}"),
        other => panic!("{other:?}"),
    }
    assert!(SpdeConfig::new(0.3, 0.3, 31, PotentialSpec::quartic()).validate().is_ok());
}

#[test]
fn resolution_preflight_counts_interface_nodes() {
    let ok = resolution_preflight(&SpdeConfig::new(0.1, 0.3, 63, PotentialSpec::quartic())).unwrap();
    assert!(ok.interface_nodes >= MIN_INTERFACE_NODES);
    assert!(resolution_preflight(&SpdeConfig::new(0.02, 0.6, 15, PotentialSpec::quartic())).is_err());
}

#[test]
fn runs_are_reproducible() {
    let cfg = SpdeConfig { t_end: 1.0, ..SpdeConfig::new(0.3, 0.3, 31, PotentialSpec::quartic()) };
    let a = run(&cfg, None, &FieldObservable::gaussian_set(), None).unwrap();
    let b = run(&cfg, None, &FieldObservable::gaussian_set(), None).unwrap();
    assert_eq!(a.final_state, b.final_state);
    assert_eq!(a.traces, b.traces);
}

#[test]
fn free_field_variance_matches_bridge() {
    let target = 0.3f64.powf(0.7) / 2.0;
    for n_x in [15, 31] {
        let cfg = SpdeConfig { t_end: 300.0, burn_in: 2.0, ..SpdeConfig::new(0.3, 0.3, n_x, PotentialSpec::zero()) };
        let out = run(&cfg, None, &[FieldObservable::Center, FieldObservable::CenterSq], None).unwrap();
        let (m, v) = (&out.observables[0], &out.observables[1]);
        assert!(m.mean.abs() < 3.0 * m.se, "mean {} ± {}", m.mean, m.se);
        assert!((v.mean - target).abs() < 3.0 * v.se, "n_x {n_x}: var {} ± {} vs {target}", v.mean, v.se);
        assert!(out.observables.iter().all(|o| o.window_z.abs() < 3.0));
    }
}

#[test]
fn free_field_agrees_with_bridge_sampler() {
    let cfg = SpdeConfig { t_end: 300.0, burn_in: 2.0, ..SpdeConfig::new(0.3, 0.3, 31, PotentialSpec::zero()) };
    let params = cfg.grid_params().unwrap();
    let bridge = BridgeSpec::new(params);
    let mut rng = stream(5, &[]);
    let samples: Vec<_> = (0..20_000).map(|_| sample_bridge(&bridge, &mut rng)).collect();
    let rep = stationarity_check(&cfg, &samples, &FieldObservable::gaussian_set(), None).unwrap();
    assert!(rep.max_abs_z < 4.0, "{:?}", rep.entries);

    let other = BridgeSpec::new(ScaleParams::with_nodes(0.2, 0.3, 16).unwrap());
    let wrong = vec![sample_bridge(&other, &mut rng)];
    assert!(matches!(stationarity_check(&cfg, &wrong, &[FieldObservable::Center], None), Err(Error::Domain(_))));
}

#[test]
fn literal_coefficients_differ_from_invariant_ones() {
    let a = SpdeConfig::new(0.3, 0.3, 31, PotentialSpec::quartic());
    let b = SpdeConfig { scaling: SpdeScaling::AsWritten, ..a.clone() };
    assert!((a.drift_coeff() - 0.3f64.powf(-0.6)).abs() < 1e-14);
    assert!((b.drift_coeff() - 0.3f64.powf(-1.3)).abs() < 1e-14);
    assert!((a.noise_coeff().powi(2) - 2.0 * b.noise_coeff().powi(2)).abs() < 1e-14);
}
