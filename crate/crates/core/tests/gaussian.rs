use acg_core::gaussian::*;
use acg_core::linalg::SymTridiag;
use acg_core::quadrature::gl20;
use acg_core::rng::stream;
use acg_core::stats::mean_var;
use acg_core::{Boundary, Error, PLPath, ScaleParams};
use nalgebra::{DMatrix, DVector};

fn sample_nodes(spec: &BridgeSpec, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream(seed, &[1]);
    (0..n).map(|_| sample_bridge(spec, &mut rng).interior().to_vec()).collect()
}

fn covariance(xs: &[Vec<f64>]) -> (Vec<f64>, DMatrix<f64>) {
    let d = xs[0].len();
    let n = xs.len() as f64;
    let mut mu = vec![0.0; d];
    for x in xs {
        for i in 0..d {
            mu[i] += x[i] / n;
        }
    }
    let mut c = DMatrix::zeros(d, d);
    for x in xs {
        for i in 0..d {
            for j in 0..d {
                c[(i, j)] += (x[i] - mu[i]) * (x[j] - mu[j]) / (n - 1.0);
            }
        }
    }
    (mu, c)
}

#[test]
fn bridge_node_law_matches_kernel() {
    let params = ScaleParams::with_nodes(0.1, 0.4, 2).unwrap();
    let spec = BridgeSpec::new(params);
    let n = 1_000_000;
    let xs = sample_nodes(&spec, n, 11);
    let (mu, c) = covariance(&xs);
    for i in 0..3 {
        let s = params.node(i + 1);
        let var = spec.kernel(s, s);
        assert!((mu[i] - spec.mean(s)).abs() <= 4.0 * (var / n as f64).sqrt());
        for j in 0..3 {
            let t = params.node(j + 1);
            let k = spec.kernel(s, t);
            let se = ((var * spec.kernel(t, t) + k * k) / n as f64).sqrt();
            assert!((c[(i, j)] - k).abs() <= 4.0 * se, "({i},{j}): {} vs {k}", c[(i, j)]);
        }
    }
    let var0 = c[(1, 1)];
    let target = 0.1f64.powf(0.6) / 2.0;
    assert!((var0 - target).abs() <= 3.0 * target * (2.0 / n as f64).sqrt());
}

#[test]
fn bridge_sample_has_fixed_endpoints() {
    let params = ScaleParams::with_nodes(0.3, 0.5, 8).unwrap();
    let u = sample_bridge(&BridgeSpec::new(params), &mut stream(3, &[]));
    assert_eq!(u.values[0], -1.0);
    assert_eq!(*u.values.last().unwrap(), 1.0);
}

#[test]
fn density_integrates_to_one() {
    let params = ScaleParams::with_nodes(0.5, 0.3, 2).unwrap();
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
                let u = PLPath::from_interior(params, &[x, y, z], Boundary::Kink).unwrap();
                total += wx * wy * wz * log_density(&spec, &u).unwrap().exp();
            }
        }
    }
    assert!((total - 1.0).abs() < 1e-6, "{total}");
}

#[test]
fn density_is_product_of_kernels() {
    let params = ScaleParams::with_nodes(0.2, 0.3, 8).unwrap();
    let spec = BridgeSpec::new(params);
    let mut rng = stream(5, &[]);
    let prec = bridge_precision(&params);
    let log_c = log_normalizer_determinant(&params).unwrap();
    for _ in 0..20 {
        let u = sample_bridge(&spec, &mut rng);
        let ld = log_density(&spec, &u).unwrap();
        let kinetic = u.slope_sq();
        let direct = log_normalizer_kernels(&params) - kinetic / (2.0 * params.epsilon);
        assert!((ld - direct).abs() < 1e-12 * ld.abs().max(1.0));
        let dx: Vec<f64> = u.interior().iter().enumerate().map(|(i, x)| x - spec.mean(params.node(i + 1))).collect();
        let via_det = log_c - params.epsilon.powf(params.gamma - 1.0) - 0.5 * prec.quad_form(&dx);
        assert!((ld - via_det).abs() < 1e-10 * ld.abs().max(1.0), "{ld} vs {via_det}");
    }
    let zero = PLPath::from_fn(params, Boundary::Zero, |_| 0.0).unwrap();
    assert!(matches!(log_density(&spec, &zero), Err(Error::Domain(_))));
}

#[test]
fn density_difference_is_kinetic_quadratic_form() {
    let params = ScaleParams::with_nodes(0.2, 0.3, 4).unwrap();
    let spec = BridgeSpec::new(params);
    let mean = PLPath::from_fn(params, Boundary::Kink, |s| spec.mean(s)).unwrap();
    let t = 0.37;
    let mut shifted = mean.clone();
    shifted.values[3] += t;
    let d = log_density(&spec, &shifted).unwrap() - log_density(&spec, &mean).unwrap();
    // the mean path is harmonic, so only the quadratic term survives
    let expected = -(2.0 * t * t / params.mesh()) / (2.0 * params.epsilon);
    assert!((d - expected).abs() < 1e-12 * expected.abs());
}

#[test]
fn determinant_routes_agree() {
    for n in 1..=8 {
        let p = ScaleParams::with_nodes(0.3, 0.4, n).unwrap();
        let a = log_normalizer_kernels(&p);
        let b = log_normalizer_determinant(&p).unwrap();
        assert!((a - b).abs() < 1e-10);
        // det tridiag(2, −1) of size n is n + 1
        let k = SymTridiag::toeplitz(2 * n - 1, 2.0, -1.0);
        assert!((k.log_det().unwrap() - (2.0 * n as f64).ln()).abs() < 1e-12);
    }
}

#[test]
fn z_ratio_checks() {
    let p = ScaleParams::with_nodes(0.2, 0.3, 8).unwrap();
    let z = z_ratios(&p, 1.0).unwrap();
    assert!(z.poincare_lo && z.poincare_hi);
    assert!((z.log_z1 - z.log_z1_kernels).abs() < 1e-10);
    assert!(z.log_ratio < 0.0);
    assert!((z.eps_exponent - 7.5).abs() < 1e-6, "{}", z.eps_exponent);
    let a = SymTridiag::new(vec![3.0, 4.0, 5.0], vec![1.0, -0.5]);
    let scaled = a.scaled(2.5);
    assert!((scaled.log_det().unwrap() - a.log_det().unwrap() - 3.0 * 2.5f64.ln()).abs() < 1e-13);
    assert!(z_ratios(&ScaleParams::with_nodes(0.2, 0.3, 65).unwrap(), 1.0).is_err());
}

#[test]
fn refinement_bridges() {
    let params = ScaleParams::with_nodes(0.1, 0.4, 4).unwrap();
    let spec = BridgeSpec::new(params);
    let delta = params.mesh();
    let n = 200_000;
    let mut rng = stream(9, &[]);
    let (mut mids, mut other, mut node) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let u = sample_bridge(&spec, &mut rng);
        let a = refine(&u, 3, 1, &mut rng).unwrap()[0] - 0.5 * (u.values[3] + u.values[4]);
        let b = refine(&u, 4, 1, &mut rng).unwrap()[0] - 0.5 * (u.values[4] + u.values[5]);
        mids.push(a);
        other.push(b);
        node.push(u.values[4]);
    }
    let (_, var) = mean_var(&mids);
    let target = params.epsilon * delta / 4.0;
    assert!((var - target).abs() <= 4.0 * target * (2.0 / n as f64).sqrt(), "{var} vs {target}");
    let corr = |x: &[f64], y: &[f64]| {
        let (mx, vx) = mean_var(x);
        let (my, vy) = mean_var(y);
        x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n as f64 * (vx * vy).sqrt())
    };
    let se = 1.0 / (n as f64).sqrt();
    assert!(corr(&mids, &other).abs() <= 3.0 * se);
    assert!(corr(&mids, &node).abs() <= 4.0 * se);
    let u = sample_bridge(&spec, &mut rng);
    assert!(refine(&u, 8, 3, &mut rng).is_err());
    assert!(refine(&u, 0, 0, &mut rng).unwrap().is_empty());
}

#[test]
fn discretization_tail_reports() {
    let params = ScaleParams::with_nodes(0.1, 0.4, 16).unwrap();
    let t = discretization_tails(&params, 20_000, 8, 21).unwrap();
    let s = 0.1f64.powf(1.0 - 0.8);
    assert!((t.expected_l2_sq - s / 48.0).abs() < 1e-15);
    let sigma = 0.1 * (params.half_length() / (std::f64::consts::PI * 16.0)).powi(2);
    assert!((t.sigma_sq - sigma).abs() < 1e-15);
    assert!((t.whole_l2.mean_sq - t.expected_l2_sq).abs() < 0.05 * t.expected_l2_sq, "{}", t.whole_l2.mean_sq);
    for r in [&t.whole_l2, &t.short_l2, &t.whole_linf] {
        assert_eq!(r.r_grid.len(), 10);
        assert!(r.dominated(), "{:?} {:?} {:?}", r.bound_name, r.empirical_p, r.theoretical_p);
    }
    assert!(discretization_tails(&params, 10, 4, 1).is_err());
}

#[test]
fn massive_field_form_and_law() {
    let params = ScaleParams::with_nodes(0.2, 0.3, 2).unwrap();
    let form = h1_form(&params);
    let delta = params.mesh();
    let mut e = vec![0.0; 3];
    e[1] = 1.0;
    let l = params.half_length();
    let expected = 2.0 * l / (3.0 * 2.0) + 2.0 * 2.0 / l;
    assert!((form.quad_form(&e) - expected).abs() < 1e-12);
    assert!((form.quad_form(&e) - (2.0 * delta / 3.0 + 2.0 / delta)).abs() < 1e-12);

    let params = ScaleParams::with_nodes(0.2, 0.3, 4).unwrap();
    let spec = MassiveFieldSpec::new(params, 1.5).unwrap();
    let mut rng = stream(17, &[]);
    let xs: Vec<Vec<f64>> = (0..1_000_000).map(|_| sample_massive_field(&spec, &mut rng).interior().to_vec()).collect();
    let (_, c) = covariance(&xs);
    let p_hat = c.try_inverse().unwrap();
    let prec = spec.precision();
    let d = prec.diag.len();
    let dense = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            prec.diag[i]
        } else if i + 1 == j {
            prec.off[i]
        } else if j + 1 == i {
            prec.off[j]
        } else {
            0.0
        }
    });
    for i in 0..d {
        for j in 0..d {
            let scale = (dense[(i, i)] * dense[(j, j)]).sqrt();
            assert!((p_hat[(i, j)] - dense[(i, j)]).abs() <= 0.05 * scale, "({i},{j})");
        }
    }
    let _ = DVector::<f64>::zeros(1);
}

#[test]
fn massive_field_scales_with_kappa() {
    let params = ScaleParams::with_nodes(0.2, 0.3, 8).unwrap();
    let a = sample_massive_field(&MassiveFieldSpec::new(params, 1.0).unwrap(), &mut stream(4, &[]));
    let b = sample_massive_field(&MassiveFieldSpec::new(params, 4.0).unwrap(), &mut stream(4, &[]));
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((0.5 * x - y).abs() < 1e-14);
    }
    assert!(MassiveFieldSpec::new(params, 0.0).is_err());
}

#[test]
fn massive_h1_tail_is_dominated() {
    let params = ScaleParams::with_nodes(0.1, 0.4, 16).unwrap();
    let spec = MassiveFieldSpec::new(params, 2.0).unwrap();
    let r = massive_h1_tail(&spec, 50_000, 3);
    let mean = 31.0 * 0.1 / 2.0;
    // χ²₃₁ scaled by ε/κ: standard error √(2·31)·(ε/κ)/√n
    assert!((r.mean_sq - mean).abs() <= 3.0 * (62.0f64).sqrt() * 0.05 / (50_000f64).sqrt(), "{}", r.mean_sq);
    assert!(r.dominated(), "{:?} vs {:?}", r.empirical_p, r.theoretical_p);
}

#[test]
fn gaussian_concentration_of_node_vector() {
    let params = ScaleParams::with_nodes(0.1, 0.4, 8).unwrap();
    let spec = BridgeSpec::new(params);
    let n = 100_000;
    let xs = sample_nodes(&spec, n, 29);
    let k = bridge_precision(&params);
    let sigma_sq = 1.0 / k.eigenvalue(0);
    let trace: f64 = (1..params.n_nodes() - 1).map(|i| spec.kernel(params.node(i), params.node(i))).sum();
    let norms: Vec<f64> = xs
        .iter()
        .map(|x| x.iter().enumerate().map(|(i, v)| (v - spec.mean(params.node(i + 1))).powi(2)).sum::<f64>().sqrt())
        .collect();
    for j in 0..10 {
        let r = j as f64 * 0.4 * sigma_sq.sqrt();
        let p = norms.iter().filter(|&&x| x >= trace.sqrt() + r).count() as f64 / n as f64;
        let bound = (-r * r / (2.0 * sigma_sq)).exp();
        assert!(p <= bound + 3.0 * (bound * (1.0 - bound) / n as f64).sqrt(), "r={r}: {p} vs {bound}");
    }
}
