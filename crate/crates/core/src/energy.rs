//! Ginzburg-Landau energy of piecewise-linear paths, Fermi coordinates
//! relative to the curve of instantons, the linearized operator and the
//! local energy landscape.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instanton::InstantonProfile;
use crate::linalg::{constrained_min_eigen, dot, norm, SymTridiag};
use crate::params::ScaleParams;
use crate::path::{Boundary, PLPath};
use crate::potential::{g_value, surface_tension, Potential, PotentialSpec};
use crate::quadrature::gl5;

/// Default tube radius for the landscape check.
pub const TUBE_RADIUS: f64 = 0.2;
/// Half-width of the ξ bracket around the first zero crossing.
pub const BRACKET: f64 = 5.0;
/// Coarse scan spacing inside the bracket before golden-section refinement.
const SCAN_STEP: f64 = 0.25;
/// Tolerance on ξ for the Fermi projection.
pub const XI_TOL: f64 = 1e-8;
/// Tolerance on the minimizing shift when only the distance is wanted; the
/// distance itself is then accurate to second order in it.
const DIST_TOL: f64 = 1e-6;

/// `Σ_cells ∫ F(u)` over `[−L, L]` with a 5-point rule per cell.
pub fn potential_integral(u: &PLPath, p: &dyn Potential) -> f64 {
    let delta = u.params.mesh();
    let rule = gl5();
    u.values
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            rule.integrate(0.0, 1.0, |t| p.value(a + (b - a) * t)) * delta
        })
        .sum()
}

fn require_kink(u: &PLPath) -> Result<()> {
    if u.boundary != Boundary::Kink {
        return Err(Error::Domain("energy needs ±1 boundary data".into()));
    }
    Ok(())
}

/// `H(u) = ∫ ½u'² + F(u) − C_*` with the ±1 extension contributing nothing.
pub fn energy(u: &PLPath, spec: &PotentialSpec) -> Result<f64> {
    require_kink(u)?;
    Ok(0.5 * u.slope_sq() + potential_integral(u, spec) - surface_tension(spec)?)
}

/// `H(u) + C_* − [G(u(+∞)) − G(u(−∞))]`, nonnegative by completing the square.
pub fn completing_squares_gap(u: &PLPath, spec: &PotentialSpec) -> Result<f64> {
    let h = energy(u, spec)?;
    let (lo, hi) = u.tails();
    Ok(h + surface_tension(spec)? - (g_value(spec, hi)? - g_value(spec, lo)?))
}

/// Tubular coordinates of a path around the instanton curve.
#[derive(Debug, Clone, Serialize)]
pub struct FermiCoords {
    pub xi: f64,
    /// `u − m_ξ` at the grid nodes.
    pub v_nodes: Vec<f64>,
    /// `(1 + m_ξ(−L), 1 − m_ξ(L))`: the residual of the ±1 tails at the interval ends.
    pub tail_gaps: (f64, f64),
    pub dist_l2: f64,
    pub normality_residual: f64,
    pub multimodal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Norm {
    L2,
    Linf,
    H1,
}

fn objective(p: &InstantonProfile, u: &PLPath, xi: f64, norm: Norm) -> f64 {
    match norm {
        Norm::L2 => p.diff_l2_sq(u, xi),
        Norm::H1 => p.diff_l2_sq(u, xi) + p.diff_slope_sq(u, xi),
        Norm::Linf => p.diff_linf(u, xi),
    }
}

fn golden(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Scans `[lo, hi]`, refines the best grid point and reports whether the
/// scan saw more than one local minimum.
///
/// With `newton` (first and second derivative of the objective) the
/// refinement is a safeguarded Newton iteration inside the bracketing
/// cells, falling back to golden section if it leaves them.
fn scan_minimize(
    f: impl Fn(f64) -> f64,
    newton: Option<&dyn Fn(f64) -> (f64, f64)>,
    lo: f64,
    hi: f64,
    tol: f64,
) -> (f64, f64, bool) {
    let n = ((hi - lo) / SCAN_STEP).ceil().max(2.0) as usize;
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut best = 0;
    for i in 1..vals.len() {
        if vals[i] < vals[best] {
            best = i;
        }
    }
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let minima = (1..vals.len() - 1)
        .filter(|&i| vals[i] < vals[i - 1] - 1e-9 * scale && vals[i] < vals[i + 1] - 1e-9 * scale)
        .count();
    let a = xs[best.saturating_sub(1)];
    let b = xs[(best + 1).min(n)];
    if let Some(d) = newton {
        let mut x = xs[best];
        for _ in 0..30 {
            let (g, h) = d(x);
            if !(h > 0.0) {
                break;
            }
            let next = x - g / h;
            if !(next > a && next < b) {
                break;
            }
            let step = (next - x).abs();
            x = next;
            if step < tol {
                return (x, f(x), minima > 1);
            }
        }
    }
    let (x, fx) = golden(&f, a, b, tol);
    (x, fx, minima > 1)
}

/// Minimizes `ξ ↦ ‖u − m_ξ‖²` on `[z − 5, z + 5]` around the first zero
/// crossing `z`, then polishes the normality condition with Newton steps.
pub fn fermi_project(u: &PLPath, p: &InstantonProfile) -> Result<FermiCoords> {
    require_kink(u)?;
    let z = *u.zero_crossings().first().ok_or(Error::NoInterface)?;
    let newton = |x: f64| {
        let (g, c) = p.diff_dots(u, x);
        (g, p.slope_total() - c)
    };
    let (mut xi, _, multimodal) = scan_minimize(|x| p.diff_l2_sq(u, x), Some(&newton), z - BRACKET, z + BRACKET, XI_TOL);
    let scale = p.slope_total();
    for _ in 0..4 {
        let (g, curv) = p.diff_dots(u, xi);
        let denom = scale - curv;
        if denom <= 0.0 {
            break;
        }
        let step = g / denom;
        if step.abs() > 10.0 * XI_TOL.max(1e-6) {
            break;
        }
        xi -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    let (normality, _) = p.diff_dots(u, xi);
    let l = u.params.half_length();
    let v_nodes = u.params.nodes().iter().zip(&u.values).map(|(&s, &x)| x - p.profile_at(s, xi)).collect();
    Ok(FermiCoords {
        xi,
        v_nodes,
        tail_gaps: (1.0 + p.profile_at(-l, xi), 1.0 - p.profile_at(l, xi)),
        dist_l2: p.diff_l2_sq(u, xi).max(0.0).sqrt(),
        normality_residual: normality,
        multimodal,
    })
}

/// `inf_ξ ‖u − m_ξ‖` in the chosen norm.
///
/// The scan covers every zero crossing with a margin of 5; a path without
/// sign change is scanned over the whole interval plus the same margin.
pub fn dist_to_m(u: &PLPath, p: &InstantonProfile, norm: Norm) -> f64 {
    dist_with_xi(u, p, norm).0
}

/// Distance and the minimizing shift.
pub fn dist_with_xi(u: &PLPath, p: &InstantonProfile, norm: Norm) -> (f64, f64) {
    let z = u.zero_crossings();
    let l = u.params.half_length();
    let (lo, hi) = match (z.first(), z.last()) {
        (Some(&a), Some(&b)) => (a - BRACKET, b + BRACKET),
        _ => (-l - BRACKET, l + BRACKET),
    };
    let newton = |x: f64| {
        let (g, c) = p.diff_dots(u, x);
        (g, p.slope_total() - c)
    };
    let newton: Option<&dyn Fn(f64) -> (f64, f64)> = if norm == Norm::L2 { Some(&newton) } else { None };
    let (xi, f, _) = scan_minimize(|x| objective(p, u, x, norm), newton, lo, hi, DIST_TOL);
    let d = match norm {
        Norm::Linf => f,
        _ => f.max(0.0).sqrt(),
    };
    (d, xi)
}

/// `⟨A_ξ v, v⟩ = ∫ v'² + F''(m_ξ) v²` for a zero-boundary path.
pub fn quad_form(p: &InstantonProfile, xi: f64, v: &PLPath, spec: &dyn Potential) -> Result<f64> {
    if v.boundary != Boundary::Zero {
        return Err(Error::Domain("quadratic form needs a zero-boundary perturbation".into()));
    }
    Ok(v.slope_sq() + p.integrate_with(v, xi, |_, vs, _, [m, _, _]| spec.d2(m) * vs * vs))
}

/// Spectral data of the linearized operator `A₀ = −d²/ds² + F''(m)`.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub h: f64,
    pub t_box: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    /// Minimum Rayleigh quotient on the L²-complement of the sampled `m'`.
    pub constrained_gap: f64,
    pub eigvec0_alignment: f64,
    /// `max_{|u| ≤ 1} |F''(u)|`.
    pub curvature_bound: f64,
    /// Lower landscape constant `ĉ₀`: `H(m + v) ≳ ĉ₀ ‖v‖²_{H¹}` for normal `v`.
    pub coercivity_lower: f64,
    /// Upper landscape constant `ĉ₄`.
    pub coercivity_upper: f64,
    pub iterations: usize,
    pub nodes: Vec<f64>,
    pub eigvec0: Vec<f64>,
}

/// Finite-difference spectrum of `A₀` on `[−T, T]` with Dirichlet ends.
pub fn spectral_report(p: &InstantonProfile, spec: &dyn Potential, h: f64, t_box: f64) -> Result<SpectralReport> {
    if !(h > 0.0 && h <= 0.05) {
        return Err(Error::InvalidParameter(format!("mesh h = {h} must lie in (0, 0.05]")));
    }
    if !(t_box >= 15.0 / p.c2) {
        return Err(Error::InvalidParameter(format!("box T = {t_box} must be at least 15/c2 = {}", 15.0 / p.c2)));
    }
    let n = (2.0 * t_box / h).round() as usize - 1;
    let nodes: Vec<f64> = (1..=n).map(|i| -t_box + i as f64 * h).collect();
    let diag = nodes.iter().map(|&s| 2.0 / (h * h) + spec.d2(p.value(s))).collect();
    let a = SymTridiag::new(diag, vec![-1.0 / (h * h); n - 1]);
    let lambda0 = a.eigenvalue(0);
    let lambda1 = a.eigenvalue(1);
    let e0 = a.eigenvector(lambda0)?;
    let w: Vec<f64> = nodes.iter().map(|&s| p.derivs(s)[1]).collect();
    let alignment = dot(&e0, &w).abs() / (norm(&e0) * norm(&w));
    let (lo, _) = a.spectrum_bounds();
    let shift = 1.0 - lo.min(0.0);
    let (gap, _, trace) = constrained_min_eigen(&a, &w, shift, 1e-13, 20_000)?;
    let curvature_bound = (0..=2000).map(|i| spec.d2(-1.0 + i as f64 / 1000.0).abs()).fold(0.0, f64::max);
    // ⟨Av, v⟩ ≥ θ(‖v‖²_{H¹} − (c5 + 1)‖v‖²) + (1 − θ)·gap·‖v‖² with θ = gap/(gap + c5 + 1).
    let c0_tilde = gap / (gap + curvature_bound + 1.0);
    Ok(SpectralReport {
        h,
        t_box,
        lambda0,
        lambda1,
        constrained_gap: gap,
        eigvec0_alignment: alignment,
        curvature_bound,
        coercivity_lower: 0.5 * c0_tilde,
        coercivity_upper: 0.5 * curvature_bound.max(1.0),
        iterations: trace.len(),
        nodes,
        eigvec0: e0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LandscapeReport {
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub h: f64,
    pub bound_lo: f64,
    pub bound_hi: f64,
    pub h1_norm: f64,
}

/// Removes the `m'_ξ` component of a zero-boundary path so that `⟨v, m'_ξ⟩ = 0`.
pub fn project_normal(p: &InstantonProfile, xi: f64, v: &PLPath) -> PLPath {
    let mut t = PLPath::from_fn(v.params, Boundary::Zero, |s| p.derivs(s - xi)[1]).expect("finite slope");
    let (a, _) = p.zero_dots(v, xi);
    let (b, _) = p.zero_dots(&t, xi);
    t.values.iter_mut().for_each(|x| *x *= a / b);
    v.minus(&t)
}

/// Evaluates `H(m_ξ + v)` and the sandwich `ĉ₀‖v‖² − R ≤ H ≤ ĉ₄‖v‖² + R`
/// with `R` the cubic Taylor remainder envelope.
pub fn landscape_check(
    p: &InstantonProfile,
    spec: &dyn Potential,
    report: &SpectralReport,
    xi: f64,
    v: &PLPath,
    tube: f64,
) -> Result<LandscapeReport> {
    if v.boundary != Boundary::Zero {
        return Err(Error::Domain("perturbation must have zero boundary".into()));
    }
    let h1 = v.h1_sq().sqrt();
    if h1 > tube {
        return Err(Error::OutOfTube { norm: h1, radius: tube });
    }
    let l2 = v.l2_sq_interval().sqrt();
    let (overlap, _) = p.zero_dots(v, xi);
    let rel = if l2 > 0.0 { overlap.abs() / (l2 * p.slope_total().sqrt()) } else { 0.0 };
    if rel > 1e-6 {
        return Err(Error::NotNormal { overlap: rel });
    }
    let h = p.integrate_with(v, xi, |_, vs, dv, [m, dm, _]| dm * dv + 0.5 * dv * dv + spec.value(m + vs) - spec.value(m));
    let vmax = v.max_abs();
    let f3 = (0..=400)
        .map(|i| spec.d3((1.0 + vmax) * (-1.0 + i as f64 / 200.0)).abs())
        .fold(0.0, f64::max);
    let remainder = f3 / 6.0 * vmax * l2 * l2;
    let bound_lo = report.coercivity_lower * h1 * h1 - remainder;
    let bound_hi = report.coercivity_upper * h1 * h1 + remainder;
    let slack = 1e-12;
    Ok(LandscapeReport {
        lower_ok: h >= bound_lo - slack,
        upper_ok: h <= bound_hi + slack,
        h,
        bound_lo,
        bound_hi,
        h1_norm: h1,
    })
}

/// Directional derivative of the Fermi shift: `−⟨m'_ξ, h⟩ / (‖m'‖² − ⟨v, m''_ξ⟩)`.
pub fn xi_directional_derivative(u: &PLPath, h: &PLPath, p: &InstantonProfile) -> Result<f64> {
    if h.boundary != Boundary::Zero {
        return Err(Error::Domain("direction must have zero boundary".into()));
    }
    let fc = fermi_project(u, p)?;
    let (num, _) = p.zero_dots(h, fc.xi);
    let (_, curv) = p.diff_dots(u, fc.xi);
    let denom = p.slope_total() - curv;
    if denom < 0.1 * p.slope_total() {
        return Err(Error::NearCaustic { denominator: denom });
    }
    Ok(-num / denom)
}

/// `(∫ e_k g)_k` over interior hat functions `e_k`.
pub fn hat_inner_products(params: &ScaleParams, g: impl Fn(f64) -> f64) -> Vec<f64> {
    let delta = params.mesh();
    let rule = gl5();
    (1..params.n_nodes() - 1)
        .map(|i| {
            let s = params.node(i);
            rule.integrate(s - delta, s, |x| g(x) * (x - s + delta) / delta)
                + rule.integrate(s, s + delta, |x| g(x) * (s + delta - x) / delta)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_ramp_energy_is_one_fifth() {
        let params = ScaleParams::with_nodes(0.25, 0.5, 2).unwrap();
        let u = PLPath::from_interior(params, &[-1.0, 0.0, 1.0], Boundary::Kink).unwrap();
        let spec = PotentialSpec::quartic();
        assert!((energy(&u, &spec).unwrap() - 0.2).abs() < 1e-14);
        assert!((completing_squares_gap(&u, &spec).unwrap() - 0.2).abs() < 1e-14);
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, _) = golden(|x| (x - 0.3).powi(2), -1.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-9);
    }
}
