use acg_core::instanton::{cutoff_profile, discretize_profile, profile_error_norms, solve_profile};
use acg_core::stats::linear_fit;
use acg_core::{PotentialSpec, ScaleParams};

fn quartic() -> acg_core::InstantonProfile {
    solve_profile(&PotentialSpec::quartic(), 1e-8).unwrap()
}

#[test]
fn quartic_profile_matches_tanh() {
    let p = quartic();
    let mut err: f64 = 0.0;
    for k in 0..=16000 {
        let s = -8.0 + 16.0 * k as f64 / 16000.0;
        err = err.max((p.value(s) - s.tanh()).abs());
    }
    assert!(err <= 1e-8, "sup error {err:e}");
    assert_eq!(p.value(0.0), 0.0);
    assert!((p.profile_at(1.0, 0.0) - 0.7615941560).abs() < 1e-9);
}

#[test]
fn profile_invariants() {
    for spec in [PotentialSpec::quartic(), PotentialSpec::sextic(), PotentialSpec::quartic().scaled(4.0)] {
        let p = solve_profile(&spec, 1e-8).unwrap();
        assert!(p.residual <= 1e-7, "{}: residual {:e}", spec.name, p.residual);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=4000 {
            let s = -30.0 + 60.0 * k as f64 / 4000.0;
            let m = p.value(s);
            assert!(m > prev || (m - prev).abs() < 1e-15);
            prev = m;
            // antisymmetry for even F
            assert!((m + p.value(-s)).abs() < 1e-10, "{} s={s}", spec.name);
            // tail bound
            let gap = 1.0 - m.abs();
            assert!(gap <= p.c1 * (-p.c2 * s.abs()).exp() * (1.0 + 1e-9) + 4.0 * f64::EPSILON);
        }
        let slope = p.tail_slope();
        assert!((slope + p.c2).abs() <= 0.02 * p.c2, "{}: tail slope {slope}", spec.name);
        assert!((p.value(1e-3) - p.value(-1e-3)) > 0.0);
    }
    let q = quartic();
    assert!((q.c2 - 2.0).abs() < 1e-12);
    assert!((q.c1 - 2.0).abs() < 1e-3, "c1 = {}", q.c1);
}

#[test]
fn translation_identity() {
    let p = quartic();
    for (s, xi) in [(0.3, 0.3), (2.0, -1.5)] {
        assert_eq!(p.profile_at(s, xi), p.value(s - xi));
    }
    assert_eq!(p.profile_at(1.7, 1.7), 0.0);
}

#[test]
fn cutoff_and_discretization() {
    let p = quartic();
    let params = ScaleParams::new(0.01, 0.6, 0.3, 0.9, Some(64)).unwrap();
    let a = params.core_width();
    let c = cutoff_profile(&p, &params, 0.5).unwrap();
    assert_eq!(c.value(0.5 + a + 1.0), 1.0);
    assert_eq!(c.value(0.5 - a - 1.0), -1.0);
    assert_eq!(c.value(0.5 + a * 0.5), p.profile_at(0.5 + a * 0.5, 0.5));
    assert!(c.max_blend_slope() <= c.blend_slope_bound());
    assert!(cutoff_profile(&p, &params, params.shift_window() + 0.1).is_err());

    let d = discretize_profile(&p, &params, 0.0).unwrap();
    let k = params.n + 1;
    assert!((d.path.values[k] - params.mesh().tanh()).abs() < 1e-9);
    assert!(d.path.values.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn discretized_example_outside_window_is_clamped() {
    // ε = 0.1, γ = 0.4, γ₁ = 0.2 has an empty window; ξ = 0 remains admissible.
    let p = quartic();
    let params = ScaleParams::new(0.1, 0.4, 0.2, 0.9, Some(32)).unwrap();
    let d = discretize_profile(&p, &params, 0.0).unwrap();
    let delta = params.mesh();
    assert!((d.path.values[33] - delta.tanh()).abs() < 1e-9);
}

#[test]
fn error_norm_rates() {
    let p = quartic();
    // Second-order discretization error: N -> 8N shrinks l2_disc by ~64.
    let base = ScaleParams::new(0.01, 0.6, 0.5, 0.9, Some(32)).unwrap();
    let fine = ScaleParams { n: 256, ..base };
    let e0 = profile_error_norms(&p, &base, 0.3).unwrap();
    let e1 = profile_error_norms(&p, &fine, 0.3).unwrap();
    let ratio = e0.l2_disc / e1.l2_disc;
    assert!(ratio > 45.0 && ratio < 90.0, "ratio {ratio}");

    // h1_disc ~ δ: slope of log h1_disc against log N is −1.
    let ns = [32usize, 64, 128, 256, 512];
    let (x, y): (Vec<f64>, Vec<f64>) = ns
        .iter()
        .map(|&n| {
            let e = profile_error_norms(&p, &ScaleParams { n, ..base }, 0.0).unwrap();
            ((n as f64).ln(), e.h1_disc.ln())
        })
        .unzip();
    let (slope, _) = linear_fit(&x, &y);
    assert!((slope + 1.0).abs() <= 0.15, "h1 exponent {slope}");

    // Cutoff error ~ exp(−c2 ε^(−γ₁)): regress log l2_cutoff on ε^(−γ₁).
    let (x, y): (Vec<f64>, Vec<f64>) = [0.2, 0.1, 0.05, 0.02, 0.01]
        .iter()
        .map(|&eps| {
            let params = ScaleParams::new(eps, 0.6, 0.3, 0.9, Some(64)).unwrap();
            let e = profile_error_norms(&p, &params, 0.0).unwrap();
            (params.core_width(), e.l2_cutoff.ln())
        })
        .unzip();
    let (slope, _) = linear_fit(&x, &y);
    assert!((slope + p.c2).abs() <= 0.15 * p.c2, "cutoff exponent {slope}");
}
