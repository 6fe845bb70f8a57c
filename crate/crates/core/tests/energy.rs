use acg_core::energy::*;
use acg_core::instanton::{discretize_profile, solve_profile};
use acg_core::potential::{g_value, surface_tension, Potential};
use acg_core::{Boundary, Error, InstantonProfile, PLPath, PotentialSpec, ScaleParams};
use nalgebra::DMatrix;
use proptest::prelude::*;
use std::sync::OnceLock;

fn quartic() -> &'static InstantonProfile {
    static P: OnceLock<InstantonProfile> = OnceLock::new();
    P.get_or_init(|| solve_profile(&PotentialSpec::quartic(), 1e-8).unwrap())
}

fn report() -> &'static SpectralReport {
    static R: OnceLock<SpectralReport> = OnceLock::new();
    R.get_or_init(|| spectral_report(quartic(), &PotentialSpec::quartic(), 0.01, 20.0).unwrap())
}

fn grid(n: usize) -> ScaleParams {
    ScaleParams::new(0.05, 0.4, 0.2, 0.9, Some(n)).unwrap()
}

/// `L ≈ 15.8`, wide enough that tail truncation is below 1e-12.
fn wide(n: usize) -> ScaleParams {
    ScaleParams::new(0.01, 0.6, 0.3, 0.9, Some(n)).unwrap()
}

#[test]
fn discretized_instanton_energy_is_small_and_decreasing() {
    let spec = PotentialSpec::quartic();
    let mut prev = f64::INFINITY;
    for n in [64, 128, 256, 512] {
        let u = discretize_profile(quartic(), &grid(n), 0.0).unwrap().path;
        let h = energy(&u, &spec).unwrap();
        assert!(h < prev, "N={n}: {h} not below {prev}");
        prev = h;
    }
    assert!(prev <= 1e-3, "H = {prev}");
    let u = discretize_profile(quartic(), &grid(512), 0.0).unwrap().path;
    assert!(completing_squares_gap(&u, &spec).unwrap().abs() <= 1e-3);
}

#[test]
fn linear_ramp() {
    let params = ScaleParams::with_nodes(0.25, 0.5, 2).unwrap();
    let u = PLPath::from_interior(params, &[-1.0, 0.0, 1.0], Boundary::Kink).unwrap();
    let spec = PotentialSpec::quartic();
    // 1 + 8/15 − 4/3
    assert!((energy(&u, &spec).unwrap() - 0.2).abs() < 1e-14);
    assert!((completing_squares_gap(&u, &spec).unwrap() - 0.2).abs() < 1e-14);
}

#[test]
fn step_path_energy_grows_like_two_over_mesh() {
    let spec = PotentialSpec::quartic();
    for n in [16, 64, 256] {
        let params = grid(n);
        let u = PLPath::from_fn(params, Boundary::Kink, |s| if s <= 0.0 { -1.0 } else { 1.0 }).unwrap();
        let h = energy(&u, &spec).unwrap();
        let delta = params.mesh();
        let expected = 2.0 / delta + 4.0 * delta / 15.0 - 4.0 / 3.0;
        assert!((h - expected).abs() < 1e-9 * expected, "N={n}: {h} vs {expected}");
    }
}

#[test]
fn energy_rejects_zero_boundary() {
    let v = PLPath::from_fn(grid(16), Boundary::Zero, |_| 0.0).unwrap();
    assert!(matches!(energy(&v, &PotentialSpec::quartic()), Err(Error::Domain(_))));
}

#[test]
fn fermi_projection_recovers_translates() {
    let params = grid(256);
    let w = params.shift_window();
    for k in 0..=8 {
        let xi = -w + 2.0 * w * k as f64 / 8.0;
        let u = discretize_profile(quartic(), &params, xi).unwrap().path;
        let fc = fermi_project(&u, quartic()).unwrap();
        assert!((fc.xi - xi).abs() <= 1e-6, "ξ={xi}: got {}", fc.xi);
        assert!(!fc.multimodal);
        assert!(fc.normality_residual.abs() <= 1e-8 * quartic().slope_total());
    }
}

#[test]
fn fermi_projection_of_normal_perturbation() {
    let params = grid(256);
    let p = quartic();
    let m0 = discretize_profile(p, &params, 0.0).unwrap().path;
    let raw = PLPath::from_fn(params, Boundary::Zero, |s| (-s * s / 4.0).exp() * (1.0 + s).cos()).unwrap();
    let w = project_normal(p, 0.0, &raw);
    let u = m0.plus_scaled(0.01, &w);
    let fc = fermi_project(&u, p).unwrap();
    // dense scan oracle
    let mut best = (f64::INFINITY, 0.0);
    for k in -2000..=2000 {
        let x = k as f64 * 1e-5;
        let d = p.diff_l2_sq(&u, x);
        if d < best.0 {
            best = (d, x);
        }
    }
    assert!(fc.xi.abs() < 1e-3, "ξ = {}", fc.xi);
    assert!((fc.xi - best.1).abs() <= 2e-5, "{} vs scan {}", fc.xi, best.1);
    assert!(fc.normality_residual.abs() <= 1e-8);
}

#[test]
fn fermi_projection_needs_kink_data() {
    // ±1 boundary data always produce a crossing; a zero-boundary path has no interface to track
    let u = PLPath::from_fn(grid(32), Boundary::Kink, |_| 1.0).unwrap();
    let fc = fermi_project(&u, quartic()).unwrap();
    assert!(fc.xi < -grid(32).half_length() + 5.0);
    let v = PLPath::from_fn(grid(32), Boundary::Zero, |_| 0.0).unwrap();
    assert!(matches!(fermi_project(&v, quartic()), Err(Error::Domain(_))));
}

#[test]
fn distances_to_instanton_curve() {
    let params = wide(1024);
    let p = quartic();
    let u = discretize_profile(p, &params, 0.2).unwrap().path;
    assert!(dist_to_m(&u, p, Norm::L2) < 1e-3);
    assert!(dist_to_m(&u, p, Norm::Linf) < 1e-3);
    let shifted = PLPath::from_fn(params, Boundary::Kink, |s| s.tanh() + 0.05).unwrap();
    assert!(dist_to_m(&shifted, p, Norm::Linf) <= 0.05 + 1e-9);
    let anti = PLPath::from_fn(params, Boundary::Kink, |s| -s.tanh()).unwrap();
    let d = dist_to_m(&anti, p, Norm::Linf);
    let mut scan = f64::INFINITY;
    for k in -400..=400 {
        scan = scan.min(p.diff_linf(&anti, k as f64 * 0.05));
    }
    assert!(d >= 1.0 && d <= scan + 1e-9, "{d} vs scan {scan}");
}

#[test]
fn quadratic_form_examples() {
    let params = wide(1024);
    let p = quartic();
    let spec = PotentialSpec::quartic();
    let tangent = PLPath::from_fn(params, Boundary::Zero, |s| p.derivs(s)[1]).unwrap();
    let q = quad_form(p, 0.0, &tangent, &spec).unwrap();
    assert!(q.abs() < 1e-3, "⟨A m', m'⟩ = {q}");

    let raw = PLPath::from_fn(params, Boundary::Zero, |s| (-s * s / 8.0).exp() * s.sin()).unwrap();
    let v = project_normal(p, 0.0, &raw);
    let q = quad_form(p, 0.0, &v, &spec).unwrap();
    assert!(q >= report().constrained_gap * v.l2_sq_interval() - 1e-3, "{q}");

    let delta = params.mesh();
    let far = params.n_nodes() - 4;
    let hat = PLPath::from_fn(params, Boundary::Zero, |s| {
        (1.0 - (s - params.node(far)).abs() / delta).max(0.0)
    })
    .unwrap();
    let expected = 2.0 / delta + spec.d2(1.0) * 2.0 * delta / 3.0;
    let q = quad_form(p, 0.0, &hat, &spec).unwrap();
    assert!((q - expected).abs() < 1e-6 * expected, "{q} vs {expected}");
}

#[test]
fn quadratic_form_is_second_variation_of_energy() {
    let params = grid(512);
    let p = quartic();
    let spec = PotentialSpec::quartic();
    let m = discretize_profile(p, &params, 0.0).unwrap().path;
    let v = PLPath::from_fn(params, Boundary::Zero, |s| (-s * s / 2.0).exp() * (0.5 + s.cos())).unwrap();
    let t = 1e-4;
    let e = |a: f64| energy(&m.plus_scaled(a, &v), &spec).unwrap();
    let fd = (e(t) - 2.0 * e(0.0) + e(-t)) / (t * t);
    let q = quad_form(p, 0.0, &v, &spec).unwrap();
    assert!((fd - q).abs() <= 1e-3 * q.abs(), "fd {fd} vs {q}");
}

#[test]
fn spectrum_of_linearized_operator() {
    let r = report();
    assert!(r.lambda0.abs() <= 1e-3, "λ0 = {}", r.lambda0);
    assert!(r.lambda0 <= r.lambda1);
    assert!((r.lambda1 - 3.0).abs() < 1e-2, "λ1 = {}", r.lambda1);
    assert!(r.eigvec0_alignment >= 0.999);
    assert!(r.constrained_gap > 0.0 && (r.constrained_gap - 3.0).abs() < 2e-2, "gap {}", r.constrained_gap);
}

#[test]
fn spectrum_matches_dense_eigensolver() {
    let p = quartic();
    let spec = PotentialSpec::quartic();
    let (h, t) = (0.02, 10.0);
    let r = spectral_report(p, &spec, h, t).unwrap();
    let n = r.nodes.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (i, &s) in r.nodes.iter().enumerate() {
        a[(i, i)] = 2.0 / (h * h) + 6.0 * s.tanh().powi(2) - 2.0;
        if i + 1 < n {
            a[(i, i + 1)] = -1.0 / (h * h);
            a[(i + 1, i)] = -1.0 / (h * h);
        }
    }
    let mut ev: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    assert!((ev[0] - r.lambda0).abs() < 1e-8, "{} vs {}", ev[0], r.lambda0);
    assert!((ev[1] - r.lambda1).abs() < 1e-8, "{} vs {}", ev[1], r.lambda1);
}

#[test]
fn spectral_report_preconditions() {
    let spec = PotentialSpec::quartic();
    assert!(spectral_report(quartic(), &spec, 0.1, 20.0).is_err());
    assert!(spectral_report(quartic(), &spec, 0.01, 5.0).is_err());
}

#[test]
fn landscape_sandwich() {
    let params = grid(512);
    let p = quartic();
    let spec = PotentialSpec::quartic();
    let r = report();
    let zero = PLPath::from_fn(params, Boundary::Zero, |_| 0.0).unwrap();
    let out = landscape_check(p, &spec, r, 0.0, &zero, TUBE_RADIUS).unwrap();
    assert_eq!(out.h, 0.0);
    assert!(out.lower_ok && out.upper_ok);

    // second eigenvector of the finite-difference operator, mapped onto the grid
    let h = r.h;
    let n = r.nodes.len();
    let diag = r.nodes.iter().map(|&s| 2.0 / (h * h) + spec.d2(p.value(s))).collect();
    let a = acg_core::linalg::SymTridiag::new(diag, vec![-1.0 / (h * h); n - 1]);
    let e1 = a.eigenvector(r.lambda1).unwrap();
    let interp = |s: f64| {
        let x = (s + r.t_box) / h - 1.0;
        if x < 0.0 || x > (n - 1) as f64 {
            return 0.0;
        }
        let i = (x.floor() as usize).min(n - 2);
        let f = x - i as f64;
        e1[i] * (1.0 - f) + e1[i + 1] * f
    };
    let raw = PLPath::from_fn(params, Boundary::Zero, interp).unwrap();
    let mut v = project_normal(p, 0.0, &raw);
    let scale = 0.05 / v.h1_sq().sqrt();
    v.values.iter_mut().for_each(|x| *x *= scale);
    let out = landscape_check(p, &spec, r, 0.0, &v, TUBE_RADIUS).unwrap();
    assert!(out.lower_ok && out.upper_ok, "{out:?}");
    assert!(out.h > 0.0);

    let mut t = PLPath::from_fn(params, Boundary::Zero, |s| p.derivs(s)[1]).unwrap();
    let scale = 0.05 / t.h1_sq().sqrt();
    t.values.iter_mut().for_each(|x| *x *= scale);
    assert!(matches!(landscape_check(p, &spec, r, 0.0, &t, TUBE_RADIUS), Err(Error::NotNormal { .. })));
    let mut big = v.clone();
    big.values.iter_mut().for_each(|x| *x *= 10.0);
    assert!(matches!(landscape_check(p, &spec, r, 0.0, &big, TUBE_RADIUS), Err(Error::OutOfTube { .. })));
}

#[test]
fn xi_derivative_examples() {
    let params = grid(256);
    let p = quartic();
    let m0 = discretize_profile(p, &params, 0.0).unwrap().path;
    let tangent = PLPath::from_fn(params, Boundary::Zero, |s| p.derivs(s)[1]).unwrap();
    let d = xi_directional_derivative(&m0, &tangent, p).unwrap();
    assert!((d + 1.0).abs() < 1e-3, "{d}");

    let odd = PLPath::from_fn(params, Boundary::Zero, |s| p.derivs(s)[2]).unwrap();
    assert!(xi_directional_derivative(&m0, &odd, p).unwrap().abs() < 1e-9);

    let bump = PLPath::from_fn(params, Boundary::Zero, |s| (-(s - 0.7).powi(2)).exp() * (1.0 + 0.3 * s)).unwrap();
    let u = m0.plus_scaled(0.05, &bump);
    let d = xi_directional_derivative(&u, &bump, p).unwrap();
    let t = 1e-4;
    let fd = (fermi_project(&u.plus_scaled(t, &bump), p).unwrap().xi
        - fermi_project(&u.plus_scaled(-t, &bump), p).unwrap().xi)
        / (2.0 * t);
    assert!((d - fd).abs() <= 1e-4 * d.abs(), "{d} vs fd {fd}");
}

#[test]
fn hat_embedding_inequality() {
    let params = grid(64);
    let delta = params.mesh();
    for k in 1..=100 {
        let (a, b) = (k as f64 * 0.37, (k % 7) as f64);
        let g = |s: f64| (a * s).sin() + b * (-s * s).exp();
        let ip = hat_inner_products(&params, g);
        let lhs = ip.iter().map(|x| x * x).sum::<f64>().sqrt();
        let l = params.half_length();
        let gl = acg_core::quadrature::adaptive(|s| g(s).powi(2), -l, l, 1e-10).unwrap().sqrt();
        assert!(lhs <= 2.0 * delta.sqrt() * gl, "{lhs} vs {gl}");
    }
}

#[test]
fn rough_lower_bound_away_from_curve() {
    let params = grid(128);
    let p = quartic();
    let spec = PotentialSpec::quartic();
    let c0 = report().coercivity_lower;
    let delta0 = 0.5;
    let mut checked = 0;
    for k in 0..1000 {
        let amp = 0.1 + 0.4 * ((k * 7919) % 1000) as f64 / 1000.0;
        let freq = 0.3 + (k % 13) as f64 * 0.2;
        let phase = (k % 17) as f64 * 0.37;
        let u = PLPath::from_fn(params, Boundary::Kink, |s| {
            s.tanh() + amp * (-(s * s) / 8.0).exp() * (freq * s + phase).sin()
        })
        .unwrap();
        let (d, _) = dist_with_xi(&u, p, Norm::H1);
        if d < delta0 / 2.0 || d > delta0 {
            continue;
        }
        checked += 1;
        let h = energy(&u, &spec).unwrap();
        assert!(h >= c0 * (delta0 / 2.0).powi(2), "counterexample k={k}: H={h}, dist={d}");
    }
    assert!(checked >= 50, "only {checked} paths in the shell");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]
    #[test]
    fn completing_squares_is_nonnegative(vals in prop::collection::vec(-2.5f64..2.5, 15)) {
        let params = ScaleParams::with_nodes(0.1, 0.5, 8).unwrap();
        let spec = PotentialSpec::quartic();
        for b in [Boundary::Kink] {
            let u = PLPath::from_interior(params, &vals, b).unwrap();
            let h = energy(&u, &spec).unwrap();
            let (lo, hi) = u.tails();
            let bracket = g_value(&spec, hi).unwrap() - g_value(&spec, lo).unwrap();
            prop_assert!(h + surface_tension(&spec).unwrap() >= bracket - 1e-9);
            prop_assert!(completing_squares_gap(&u, &spec).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn energy_is_invariant_under_whole_node_shift(vals in prop::collection::vec(-1.0f64..1.0, 13)) {
        let params = ScaleParams::with_nodes(0.1, 0.5, 8).unwrap();
        let spec = PotentialSpec::quartic();
        let mut a = vec![-1.0];
        a.extend(&vals);
        a.push(1.0);
        let mut b = vec![-1.0, -1.0];
        b.extend(&vals);
        let u = PLPath::from_interior(params, &a, Boundary::Kink).unwrap();
        let w = PLPath::from_interior(params, &b, Boundary::Kink).unwrap();
        prop_assert_eq!(energy(&u, &spec).unwrap(), energy(&w, &spec).unwrap());
    }
}
