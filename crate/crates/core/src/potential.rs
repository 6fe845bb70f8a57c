//! Double-well potentials, the antiderivative `G(u) = ∫₀ᵘ √(2F)`, the
//! surface tension `C_* = G(1) - G(-1)` and the bounded-slope cutoff.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Absolute tolerance used for `G` by adaptive quadrature.
pub const G_TOL: f64 = 1e-12;

/// A scalar potential with four derivatives.
pub trait Potential: Send + Sync {
    fn value(&self, u: f64) -> f64;
    fn d1(&self, u: f64) -> f64;
    fn d2(&self, u: f64) -> f64;
    fn d3(&self, u: f64) -> f64;
}

/// Functional form of a [`PotentialSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    /// `½(u² − 1)²`, evaluated in factored form.
    Quartic,
    /// `½(u² − 1)²(1 + u²)`.
    Sextic,
    /// `Σ c_k u^k` with ascending coefficients, evaluated by Horner.
    Polynomial(Vec<f64>),
    /// `F ≡ 0`; only meaningful for the Gaussian reference runs.
    Zero,
}

/// Named potential: `scale · F_kind`. Wells are at ±1 for the double-well kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub name: String,
    pub kind: PotentialKind,
    pub scale: f64,
}

impl PotentialSpec {
    pub fn quartic() -> Self {
        PotentialSpec { name: "quartic".into(), kind: PotentialKind::Quartic, scale: 1.0 }
    }

    pub fn sextic() -> Self {
        PotentialSpec { name: "sextic".into(), kind: PotentialKind::Sextic, scale: 1.0 }
    }

    pub fn zero() -> Self {
        PotentialSpec { name: "zero".into(), kind: PotentialKind::Zero, scale: 1.0 }
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        PotentialSpec { name: "polynomial".into(), kind: PotentialKind::Polynomial(coeffs), scale: 1.0 }
    }

    /// Looks up a registered potential by name.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "quartic" => Some(Self::quartic()),
            "sextic" => Some(Self::sextic()),
            "zero" => Some(Self::zero()),
            _ => None,
        }
    }

    pub fn registered() -> Vec<Self> {
        vec![Self::quartic(), Self::sextic()]
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.scale *= factor;
        self.name = format!("{}*{}", self.name, factor);
        self
    }

    fn closed_g(&self, u: f64) -> Option<f64> {
        match self.kind {
            PotentialKind::Quartic => {
                // √(2F) = |1 − u²|; odd antiderivative with a kink at ±1.
                let a = u.abs();
                let g = if a <= 1.0 { a - a * a * a / 3.0 } else { a * a * a / 3.0 - a + 4.0 / 3.0 };
                Some(self.scale.sqrt() * g.copysign(u))
            }
            PotentialKind::Zero => Some(0.0),
            _ => None,
        }
    }

    /// `true` when `G` has a closed form for this spec.
    pub fn has_closed_form_g(&self) -> bool {
        self.closed_g(0.0).is_some()
    }

    /// Closed form of the instanton, if known (`tanh` for the quartic).
    pub fn closed_form_profile(&self, s: f64) -> Option<f64> {
        match self.kind {
            PotentialKind::Quartic => Some((self.scale.sqrt() * s).tanh()),
            _ => None,
        }
    }
}

fn horner(c: &[f64], u: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * u + a)
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect()
}

impl Potential for PotentialSpec {
    fn value(&self, u: f64) -> f64 {
        let v = match &self.kind {
            PotentialKind::Quartic => {
                let w = (u - 1.0) * (u + 1.0);
                0.5 * w * w
            }
            PotentialKind::Sextic => {
                let w = (u - 1.0) * (u + 1.0);
                0.5 * w * w * (1.0 + u * u)
            }
            PotentialKind::Polynomial(c) => horner(c, u),
            PotentialKind::Zero => 0.0,
        };
        self.scale * v
    }

    fn d1(&self, u: f64) -> f64 {
        let v = match &self.kind {
            PotentialKind::Quartic => 2.0 * u * (u - 1.0) * (u + 1.0),
            PotentialKind::Sextic => u * (u - 1.0) * (u + 1.0) * (3.0 * u * u + 1.0),
            PotentialKind::Polynomial(c) => horner(&derivative(c), u),
            PotentialKind::Zero => 0.0,
        };
        self.scale * v
    }

    fn d2(&self, u: f64) -> f64 {
        let v = match &self.kind {
            PotentialKind::Quartic => 6.0 * u * u - 2.0,
            // d/du (3u⁵ − 2u³ − u)
            PotentialKind::Sextic => 15.0 * u.powi(4) - 6.0 * u * u - 1.0,
            PotentialKind::Polynomial(c) => horner(&derivative(&derivative(c)), u),
            PotentialKind::Zero => 0.0,
        };
        self.scale * v
    }

    fn d3(&self, u: f64) -> f64 {
        let v = match &self.kind {
            PotentialKind::Quartic => 12.0 * u,
            PotentialKind::Sextic => 60.0 * u.powi(3) - 12.0 * u,
            PotentialKind::Polynomial(c) => horner(&derivative(&derivative(&derivative(c))), u),
            PotentialKind::Zero => 0.0,
        };
        self.scale * v
    }
}

/// Per-clause outcome of [`assert_double_well`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub clause_a: bool,
    pub clause_b: bool,
    pub clause_c: bool,
    /// `(clause, u, description)` for every failure found.
    pub witnesses: Vec<(char, f64, String)>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.clause_a && self.clause_b && self.clause_c
    }
}

/// Default probe grid: 2001 points on [−3, 3].
pub fn default_probe() -> Vec<f64> {
    (0..=2000).map(|i| -3.0 + 6.0 * i as f64 / 2000.0).collect()
}

/// Numerical check of the standing assumptions on a probe grid:
/// (a) F ≥ 0 with zeros exactly at ±1, (b) F' vanishes exactly at −1, 0, 1
/// with F''(0) < 0 < F''(±1), (c) F is even.
pub fn assert_double_well(p: &dyn Potential, probe: &[f64]) -> Result<AssumptionReport> {
    let lo = probe.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = probe.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if probe.len() < 1000 || lo > -3.0 || hi < 3.0 {
        return Err(Error::InvalidParameter("probe must cover [-3, 3] with at least 1000 points".into()));
    }
    let mut grid: Vec<f64> = probe.to_vec();
    grid.sort_by(|a, b| a.total_cmp(b));
    for &u in &grid {
        for v in [p.value(u), p.d1(u), p.d2(u)] {
            if !v.is_finite() {
                return Err(Error::InvalidPotential(format!("non-finite value at u = {u}")));
            }
        }
    }
    let mut w = Vec::new();
    let zero_tol = 1e-12;

    // (a)
    let mut a = true;
    for well in [-1.0, 1.0] {
        if p.value(well).abs() > zero_tol {
            a = false;
            w.push(('a', well, format!("F({well}) = {} is not zero", p.value(well))));
        }
    }
    for &u in &grid {
        let f = p.value(u);
        if f < -zero_tol {
            a = false;
            w.push(('a', u, format!("F({u}) = {f} is negative")));
            break;
        }
        if (u.abs() - 1.0).abs() > 1e-9 && f <= 0.0 {
            a = false;
            w.push(('a', u, format!("F({u}) = {f} vanishes away from the wells")));
            break;
        }
    }

    // (b)
    let mut b = true;
    for z in [-1.0, 0.0, 1.0] {
        if p.d1(z).abs() > 1e-10 {
            b = false;
            w.push(('b', z, format!("F'({z}) = {} is not zero", p.d1(z))));
        }
    }
    if p.d2(0.0) >= 0.0 {
        b = false;
        w.push(('b', 0.0, format!("F''(0) = {} is not negative", p.d2(0.0))));
    }
    for well in [-1.0, 1.0] {
        if p.d2(well) <= 0.0 {
            b = false;
            w.push(('b', well, format!("F''({well}) = {} is not positive", p.d2(well))));
        }
    }
    // Sign changes of F' must occur only next to the three prescribed zeros.
    let spacing = (hi - lo) / (grid.len() - 1) as f64;
    let mut changes = 0;
    for pair in grid.windows(2) {
        let (s0, s1) = (p.d1(pair[0]), p.d1(pair[1]));
        if s0 == 0.0 || s0.signum() != s1.signum() {
            let mid = 0.5 * (pair[0] + pair[1]);
            let near = [-1.0f64, 0.0, 1.0].iter().any(|z| (mid - z).abs() <= 1.5 * spacing);
            if s0 != 0.0 || s1 != 0.0 {
                changes += 1;
            }
            if !near {
                b = false;
                w.push(('b', mid, "F' changes sign away from {-1, 0, 1}".into()));
            }
        }
    }
    if changes < 3 {
        b = false;
        w.push(('b', f64::NAN, format!("F' has {changes} sign changes, expected 3")));
    }

    // (c)
    let mut c = true;
    for &u in &grid {
        let d = p.value(u) - p.value(-u);
        if d.abs() > 1e-12 * (1.0 + p.value(u).abs()) {
            c = false;
            w.push(('c', u, format!("F({u}) - F({}) = {d:e}", -u)));
            break;
        }
    }
    Ok(AssumptionReport { clause_a: a, clause_b: b, clause_c: c, witnesses: w })
}

/// `G(u)` by adaptive Gauss-Legendre, splitting at the wells where √(2F) has a kink.
pub fn g_quadrature(p: &dyn Potential, u: f64) -> Result<f64> {
    if !u.is_finite() {
        return Err(Error::InvalidParameter(format!("G evaluated at non-finite u = {u}")));
    }
    let f = |t: f64| (2.0 * p.value(t).max(0.0)).sqrt();
    let mut breaks = vec![0.0];
    for k in [-1.0, 1.0] {
        if (k > 0.0 && u > k) || (k < 0.0 && u < k) {
            breaks.push(k);
        }
    }
    breaks.push(u);
    let mut total = 0.0;
    for pair in breaks.windows(2) {
        total += quadrature::adaptive(f, pair[0], pair[1], G_TOL / 4.0)?;
    }
    Ok(total)
}

/// `G(u)`, from the closed form when one is registered.
pub fn g_value(spec: &PotentialSpec, u: f64) -> Result<f64> {
    if !u.is_finite() {
        return Err(Error::InvalidParameter(format!("G evaluated at non-finite u = {u}")));
    }
    match spec.closed_g(u) {
        Some(g) => Ok(g),
        None => g_quadrature(spec, u),
    }
}

/// `C_* = G(1) − G(−1)`.
pub fn surface_tension(spec: &PotentialSpec) -> Result<f64> {
    Ok(g_value(spec, 1.0)? - g_value(spec, -1.0)?)
}

/// Surface tension for any potential, always by quadrature.
pub fn surface_tension_quadrature(p: &dyn Potential) -> Result<f64> {
    Ok(g_quadrature(p, 1.0)? - g_quadrature(p, -1.0)?)
}

/// `F` modified outside `[−R, R]` so that `F'` is bounded.
///
/// On `[R, R + w]` the second derivative is ramped from `F''(R)` to zero with
/// the cubic smoothstep, which makes the blend C² and convex; beyond it the
/// potential is affine. The left side mirrors this.
#[derive(Debug, Clone)]
pub struct CutoffPotential {
    pub base: PotentialSpec,
    pub cut_radius: f64,
    pub blend_width: f64,
    f_r: [f64; 2],
    df_r: [f64; 2],
    d2f_r: [f64; 2],
}

/// Builds the cutoff potential.
pub fn cutoff(spec: &PotentialSpec, cut_radius: f64) -> Result<CutoffPotential> {
    cutoff_with_width(spec, cut_radius, 1.0)
}

pub fn cutoff_with_width(spec: &PotentialSpec, cut_radius: f64, blend_width: f64) -> Result<CutoffPotential> {
    if !(cut_radius >= 1.0) || !cut_radius.is_finite() {
        return Err(Error::InvalidParameter(format!("cut radius {cut_radius} is inside the wells at ±1")));
    }
    if !(blend_width > 0.0) {
        return Err(Error::InvalidParameter(format!("blend width {blend_width} must be positive")));
    }
    let side = |r: f64| (spec.value(r), spec.d1(r), spec.d2(r));
    let (fp, dp, sp) = side(cut_radius);
    let (fm, dm, sm) = side(-cut_radius);
    Ok(CutoffPotential {
        base: spec.clone(),
        cut_radius,
        blend_width,
        f_r: [fm, fp],
        df_r: [dm, dp],
        d2f_r: [sm, sp],
    })
}

impl CutoffPotential {
    /// Constant slope magnitude beyond the blend zone.
    pub fn exit_slope(&self) -> f64 {
        let w = self.blend_width;
        (self.df_r[1] + 0.5 * self.d2f_r[1] * w).abs().max((self.df_r[0] - 0.5 * self.d2f_r[0] * w).abs())
    }

    /// Value and three derivatives at `u`, using `t ≥ 0` measured outward from the cut.
    fn eval(&self, u: f64) -> [f64; 4] {
        if u.abs() <= self.cut_radius {
            return [self.base.value(u), self.base.d1(u), self.base.d2(u), self.base.d3(u)];
        }
        let side = if u > 0.0 { 1 } else { 0 };
        let sgn = if u > 0.0 { 1.0 } else { -1.0 };
        let t = u.abs() - self.cut_radius;
        let w = self.blend_width;
        // Outward-coordinate derivatives: d/dt = sgn · d/du.
        let f0 = self.f_r[side];
        let f1 = sgn * self.df_r[side];
        let f2 = self.d2f_r[side];
        let (v, d1, d2, d3) = if t <= w {
            let x = t / w;
            let val = f0 + f1 * t + f2 * (t * t / 2.0 - w * w * (x.powi(4) / 4.0 - x.powi(5) / 10.0));
            let der = f1 + f2 * (t - w * (x.powi(3) - x.powi(4) / 2.0));
            let sec = f2 * (1.0 - 3.0 * x * x + 2.0 * x.powi(3));
            let thd = f2 * (-6.0 * x + 6.0 * x * x) / w;
            (val, der, sec, thd)
        } else {
            let exit_val = f0 + f1 * w + f2 * w * w * 0.35;
            let exit_der = f1 + 0.5 * f2 * w;
            (exit_val + exit_der * (t - w), exit_der, 0.0, 0.0)
        };
        [v, sgn * d1, d2, sgn * d3]
    }
}

impl Potential for CutoffPotential {
    fn value(&self, u: f64) -> f64 {
        self.eval(u)[0]
    }
    fn d1(&self, u: f64) -> f64 {
        self.eval(u)[1]
    }
    fn d2(&self, u: f64) -> f64 {
        self.eval(u)[2]
    }
    fn d3(&self, u: f64) -> f64 {
        self.eval(u)[3]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_derivatives_match_finite_differences() {
        let q = PotentialSpec::quartic();
        let s = PotentialSpec::sextic();
        let h = 1e-5;
        for p in [&q, &s] {
            for &u in &[-1.7, -0.3, 0.0, 0.4, 1.2] {
                let fd1 = (p.value(u + h) - p.value(u - h)) / (2.0 * h);
                let fd2 = (p.d1(u + h) - p.d1(u - h)) / (2.0 * h);
                let fd3 = (p.d2(u + h) - p.d2(u - h)) / (2.0 * h);
                assert!((fd1 - p.d1(u)).abs() < 1e-8);
                assert!((fd2 - p.d2(u)).abs() < 1e-8);
                assert!((fd3 - p.d3(u)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn closed_form_g_for_quartic() {
        let q = PotentialSpec::quartic();
        assert!((g_value(&q, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((g_value(&q, -1.0).unwrap() + 2.0 / 3.0).abs() < 1e-15);
        for &u in &[-2.5, -1.0, -0.2, 0.7, 1.0, 1.8] {
            let a = g_value(&q, u).unwrap();
            let b = g_quadrature(&q, u).unwrap();
            assert!((a - b).abs() < 1e-12, "u={u}: {a} vs {b}");
        }
    }

    #[test]
    fn cutoff_blend_is_c2() {
        let c = cutoff(&PotentialSpec::quartic(), 2.0).unwrap();
        for r in [2.0, 3.0, -2.0, -3.0] {
            let e = 1e-9;
            let (l, h) = (c.eval(r - e), c.eval(r + e));
            for k in 0..3 {
                assert!((l[k] - h[k]).abs() < 1e-6, "r={r} k={k}: {} {}", l[k], h[k]);
            }
        }
    }
}
