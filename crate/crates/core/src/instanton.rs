//! The standing wave `m` solving `m' = √(2F(m))`, `m(0) = 0`, its translates,
//! the cutoff profile `m^ε_ξ` and the grid-discretized profile.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ScaleParams;
use crate::path::{Boundary, PLPath};
use crate::potential::{Potential, PotentialSpec};
use crate::quadrature::{gl10, gl6, gl8};

/// Below this distance to a well the integrand uses its two-term expansion.
const NEAR_WELL: f64 = 1e-6;
/// Width of the integration panels for whole-line functionals.
const PANEL: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileOptions {
    /// Table radius in units of the decay length: `T_tab = decay_lengths / c2`.
    pub decay_lengths: f64,
    /// Approximate number of table nodes over `[−T_tab, T_tab]`.
    pub points: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions { decay_lengths: 40.0, points: 4096 }
    }
}

/// Tabulated instanton with quintic Hermite interpolation (values, slopes and
/// curvatures at the nodes are exact consequences of the first-order ODE).
#[derive(Debug, Clone)]
pub struct InstantonProfile {
    pub spec: PotentialSpec,
    pub closed_form: bool,
    /// Tail prefactor: `|1 ∓ m(±s)|, |m'|/c2, |m''|/c2² ≤ c1·exp(−c2·|s|)`.
    pub c1: f64,
    /// Tail decay rate `√F''(1)`.
    pub c2: f64,
    c2_left: f64,
    pub t_tab: f64,
    pub tol: f64,
    /// Max of `|m' − √(2F(m))|` at interval midpoints of the table.
    pub residual: f64,
    s: Vec<f64>,
    m: Vec<f64>,
    dm: Vec<f64>,
    d2m: Vec<f64>,
    /// Exact distance `1 − |m|` to the nearer well at each node.
    gap: Vec<f64>,
    gap_lo: f64,
    gap_hi: f64,
    right_sq: Vec<f64>,
    left_sq: Vec<f64>,
    slope_cum: Vec<f64>,
}

struct Side {
    s: Vec<f64>,
    gap: Vec<f64>,
    dm: Vec<f64>,
    d2m: Vec<f64>,
}

fn build_side(spec: &PotentialSpec, sigma: f64, t_tab: f64, dw: f64) -> Side {
    let f2 = spec.d2(sigma);
    let f3 = spec.d3(sigma);
    let c2 = f2.sqrt();
    let k = sigma * f3 / (3.0 * f2);
    // ds/dw with d = e^{−w}, m = σ(1 − d).
    let integrand = |w: f64| {
        let d = (-w).exp();
        if d < NEAR_WELL {
            1.0 / (c2 * (1.0 - k * d).sqrt())
        } else {
            d / (2.0 * spec.value(sigma * (1.0 - d))).sqrt()
        }
    };
    let slope = |d: f64| {
        if d < NEAR_WELL {
            c2 * d * (1.0 - k * d).sqrt()
        } else {
            (2.0 * spec.value(sigma * (1.0 - d))).sqrt()
        }
    };
    let curv = |d: f64| {
        if d < NEAR_WELL {
            -sigma * f2 * d + 0.5 * f3 * d * d
        } else {
            spec.d1(sigma * (1.0 - d))
        }
    };
    let rule = gl10();
    let mut side = Side { s: vec![0.0], gap: vec![1.0], dm: vec![slope(1.0)], d2m: vec![curv(1.0)] };
    let mut w = 0.0;
    let mut s = 0.0;
    while s < t_tab {
        s += rule.integrate(w, w + dw, integrand);
        w += dw;
        let d = (-w).exp();
        side.s.push(s);
        side.gap.push(d);
        side.dm.push(slope(d));
        side.d2m.push(curv(d));
    }
    side
}

/// Solves the instanton with default options.
pub fn solve_profile(spec: &PotentialSpec, tol: f64) -> Result<InstantonProfile> {
    solve_profile_with(spec, tol, ProfileOptions::default())
}

pub fn solve_profile_with(spec: &PotentialSpec, tol: f64, opts: ProfileOptions) -> Result<InstantonProfile> {
    let (f2p, f2m) = (spec.d2(1.0), spec.d2(-1.0));
    if !(f2p > 0.0 && f2m > 0.0) {
        return Err(Error::InvalidPotential(format!(
            "F''(±1) = ({f2m}, {f2p}) must be positive for an integrable profile"
        )));
    }
    if !(spec.value(0.0) > 0.0) {
        return Err(Error::InvalidPotential("F(0) must be positive".into()));
    }
    let c2 = f2p.sqrt();
    let c2_left = f2m.sqrt();
    let t_tab = opts.decay_lengths / c2.min(c2_left);
    // w-range needed to reach T_tab, from the coarse asymptotics s ≈ (w + const)/c2.
    let coarse = build_side(spec, 1.0, t_tab, 0.5);
    let w_end = 0.5 * (coarse.s.len() - 1) as f64;
    let dw = w_end / (opts.points / 2).max(16) as f64;
    let right = build_side(spec, 1.0, t_tab, dw);
    let left = build_side(spec, -1.0, t_tab, dw);

    let mut s = Vec::new();
    let mut m = Vec::new();
    let mut dm = Vec::new();
    let mut d2m = Vec::new();
    let mut gap = Vec::new();
    for j in (1..left.s.len()).rev() {
        gap.push(left.gap[j]);
        s.push(-left.s[j]);
        m.push(-1.0 + left.gap[j]);
        dm.push(left.dm[j]);
        d2m.push(left.d2m[j]);
    }
    for j in 0..right.s.len() {
        gap.push(right.gap[j]);
        s.push(right.s[j]);
        m.push(1.0 - right.gap[j]);
        dm.push(right.dm[j]);
        d2m.push(right.d2m[j]);
    }
    for w in s.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::numeric("profile table is not strictly increasing in s"));
        }
    }
    let gap_lo = *left.gap.last().unwrap();
    let gap_hi = *right.gap.last().unwrap();

    let mut p = InstantonProfile {
        spec: spec.clone(),
        closed_form: spec.closed_form_profile(0.0).is_some(),
        c1: 0.0,
        c2,
        c2_left,
        t_tab,
        tol,
        residual: 0.0,
        s,
        m,
        dm,
        d2m,
        gap,
        gap_lo,
        gap_hi,
        right_sq: Vec::new(),
        left_sq: Vec::new(),
        slope_cum: Vec::new(),
    };
    p.build_cumulative();
    p.c1 = p.fit_c1();
    p.residual = p.midpoint_residual();
    if p.residual > 10.0 * tol {
        return Err(Error::Numeric {
            message: format!("profile residual {:e} exceeds 10·tol", p.residual),
            trace: vec![p.residual],
        });
    }
    Ok(p)
}

#[inline]
fn hermite5(h: f64, t: f64, y0: [f64; 3], y1: [f64; 3]) -> [f64; 3] {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let d0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let d1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let d2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
    let d3 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
    let d4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let d5 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
    let s0 = -60.0 * t + 180.0 * t2 - 120.0 * t3;
    let s1 = -36.0 * t + 96.0 * t2 - 60.0 * t3;
    let s2 = 0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3);
    let s3 = 0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3);
    let s4 = -24.0 * t + 84.0 * t2 - 60.0 * t3;
    let s5 = 60.0 * t - 180.0 * t2 + 120.0 * t3;
    let v = y0[0] * h0 + h * y0[1] * h1 + h * h * y0[2] * h2 + h * h * y1[2] * h3 + h * y1[1] * h4 + y1[0] * h5;
    let d = (y0[0] * d0 + y1[0] * d5) / h + y0[1] * d1 + y1[1] * d4 + h * (y0[2] * d2 + y1[2] * d3);
    let c = (y0[0] * s0 + y1[0] * s5) / (h * h) + (y0[1] * s1 + y1[1] * s4) / h + y0[2] * s2 + y1[2] * s3;
    [v, d, c]
}

impl InstantonProfile {
    /// `(m, m', m'')` at `s`.
    #[inline]
    pub fn derivs(&self, s: f64) -> [f64; 3] {
        let n = self.s.len();
        let (s_lo, s_hi) = (self.s[0], self.s[n - 1]);
        if s >= s_hi {
            let e = self.gap_hi * (-self.c2 * (s - s_hi)).exp();
            return [1.0 - e, self.c2 * e, -self.c2 * self.c2 * e];
        }
        if s <= s_lo {
            let e = self.gap_lo * (self.c2_left * (s - s_lo)).exp();
            return [-1.0 + e, self.c2_left * e, self.c2_left * self.c2_left * e];
        }
        let j = self.s.partition_point(|&x| x <= s).saturating_sub(1).min(n - 2);
        let h = self.s[j + 1] - self.s[j];
        let t = (s - self.s[j]) / h;
        hermite5(
            h,
            t,
            [self.m[j], self.dm[j], self.d2m[j]],
            [self.m[j + 1], self.dm[j + 1], self.d2m[j + 1]],
        )
    }

    /// `m(s)`.
    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        self.derivs(s)[0]
    }

    /// `m_ξ(s) = m(s − ξ)`.
    #[inline]
    pub fn profile_at(&self, s: f64, xi: f64) -> f64 {
        self.value(s - xi)
    }

    /// Table rows `(s, m, m', residual)` where the residual compares the
    /// stored slope with `√(2F(m))` recomputed from the stored value.
    pub fn table(&self) -> Vec<[f64; 4]> {
        (0..self.s.len())
            .map(|j| {
                let r = (self.dm[j] - (2.0 * self.spec.value(self.m[j]).max(0.0)).sqrt()).abs();
                [self.s[j], self.m[j], self.dm[j], r]
            })
            .collect()
    }

    pub fn table_len(&self) -> usize {
        self.s.len()
    }

    fn midpoint_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for j in 0..self.s.len() - 1 {
            let [m, dm, _] = self.derivs(0.5 * (self.s[j] + self.s[j + 1]));
            r = r.max((dm - (2.0 * self.spec.value(m).max(0.0)).sqrt()).abs());
        }
        r
    }

    fn fit_c1(&self) -> f64 {
        let mut c1: f64 = 0.0;
        for j in 0..self.s.len() {
            let s = self.s[j];
            let c = if s >= 0.0 { self.c2 } else { self.c2_left };
            let e = (c * s.abs()).exp();
            c1 = c1.max(self.gap[j] * e).max(self.dm[j] * e / c).max(self.d2m[j].abs() * e / (c * c));
        }
        c1 * (1.0 + 1e-9)
    }

    /// Least-squares slope of `log(1 − m)` over `[T_tab/2, T_tab]`.
    pub fn tail_slope(&self) -> f64 {
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        let n = self.s.len();
        for j in 0..n {
            let s = self.s[j];
            if s >= 0.5 * self.t_tab && s <= self.t_tab {
                xs.push(s);
                ys.push(self.gap[j].ln());
            }
        }
        crate::stats::linear_fit(&xs, &ys).0
    }

    fn build_cumulative(&mut self) {
        let n = self.s.len();
        let rule = gl8();
        let mut right = vec![0.0; n];
        right[n - 1] = self.gap_hi * self.gap_hi / (2.0 * self.c2);
        for j in (0..n - 1).rev() {
            right[j] = right[j + 1] + rule.integrate(self.s[j], self.s[j + 1], |x| (1.0 - self.value(x)).powi(2));
        }
        let mut left = vec![0.0; n];
        let mut slope = vec![0.0; n];
        left[0] = self.gap_lo * self.gap_lo / (2.0 * self.c2_left);
        slope[0] = self.c2_left * self.gap_lo * self.gap_lo / 2.0;
        for j in 1..n {
            let (a, b) = (self.s[j - 1], self.s[j]);
            left[j] = left[j - 1] + rule.integrate(a, b, |x| (1.0 + self.value(x)).powi(2));
            slope[j] = slope[j - 1] + rule.integrate(a, b, |x| self.derivs(x)[1].powi(2));
        }
        self.right_sq = right;
        self.left_sq = left;
        self.slope_cum = slope;
    }

    fn locate(&self, s: f64) -> usize {
        self.s.partition_point(|&x| x <= s).saturating_sub(1).min(self.s.len() - 2)
    }

    /// `∫_a^∞ (1 − m)²`.
    pub fn right_tail_sq(&self, a: f64) -> f64 {
        let n = self.s.len();
        let (s_lo, s_hi) = (self.s[0], self.s[n - 1]);
        if a >= s_hi {
            return self.gap_hi * self.gap_hi * (-2.0 * self.c2 * (a - s_hi)).exp() / (2.0 * self.c2);
        }
        if a < s_lo {
            let (l, c, d) = (s_lo - a, self.c2_left, self.gap_lo);
            let e = (-c * l).exp();
            return self.right_sq[0] + 4.0 * l - 4.0 * d * (1.0 - e) / c + d * d * (1.0 - e * e) / (2.0 * c);
        }
        let j = self.locate(a);
        self.right_sq[j + 1] + gl8().integrate(a, self.s[j + 1], |x| (1.0 - self.value(x)).powi(2))
    }

    /// `∫_{−∞}^b (1 + m)²`.
    pub fn left_tail_sq(&self, b: f64) -> f64 {
        let n = self.s.len();
        let (s_lo, s_hi) = (self.s[0], self.s[n - 1]);
        if b <= s_lo {
            let c = self.c2_left;
            return self.gap_lo * self.gap_lo * (2.0 * c * (b - s_lo)).exp() / (2.0 * c);
        }
        if b > s_hi {
            let (l, c, d) = (b - s_hi, self.c2, self.gap_hi);
            let e = (-c * l).exp();
            return self.left_sq[n - 1] + 4.0 * l - 4.0 * d * (1.0 - e) / c + d * d * (1.0 - e * e) / (2.0 * c);
        }
        let j = self.locate(b);
        self.left_sq[j] + gl8().integrate(self.s[j], b, |x| (1.0 + self.value(x)).powi(2))
    }

    /// `∫_{−∞}^b m'²`.
    pub fn slope_sq_below(&self, b: f64) -> f64 {
        let n = self.s.len();
        let (s_lo, s_hi) = (self.s[0], self.s[n - 1]);
        if b <= s_lo {
            let c = self.c2_left;
            return c * self.gap_lo * self.gap_lo * (2.0 * c * (b - s_lo)).exp() / 2.0;
        }
        if b >= s_hi {
            let c = self.c2;
            return self.slope_total() - c * self.gap_hi * self.gap_hi * (-2.0 * c * (b - s_hi)).exp() / 2.0;
        }
        let j = self.locate(b);
        self.slope_cum[j] + gl8().integrate(self.s[j], b, |x| self.derivs(x)[1].powi(2))
    }

    /// `‖m'‖²_{L²(ℝ)}`, which equals `C_*`.
    pub fn slope_total(&self) -> f64 {
        self.slope_cum[self.s.len() - 1] + self.c2 * self.gap_hi * self.gap_hi / 2.0
    }

    /// Iterates quadrature points `(s, weight, u(s), u'(s))` of a path over `[−L, L]`.
    fn for_panels(&self, u: &PLPath, mut f: impl FnMut(f64, f64, f64, f64)) {
        let delta = u.params.mesh();
        let sub = (delta / PANEL).ceil().max(1.0) as usize;
        let h = delta / sub as f64;
        let rule = gl6();
        for c in 0..u.n_cells() {
            let s0 = u.cell_start(c);
            let (a, b) = (u.values[c], u.values[c + 1]);
            let slope = (b - a) / delta;
            for k in 0..sub {
                let lo = s0 + k as f64 * h;
                for (x, w) in rule.mapped(lo, lo + h) {
                    f(x, w, a + slope * (x - s0), slope);
                }
            }
        }
    }

    /// `‖u − m_ξ‖²_{L²(ℝ)}` for a path with ±1 boundary data.
    pub fn diff_l2_sq(&self, u: &PLPath, xi: f64) -> f64 {
        let mut acc = 0.0;
        self.for_panels(u, |s, w, us, _| acc += w * (us - self.value(s - xi)).powi(2));
        let l = u.params.half_length();
        acc + self.right_tail_sq(l - xi) + self.left_tail_sq(-l - xi)
    }

    /// `‖u' − m'_ξ‖²_{L²(ℝ)}`.
    pub fn diff_slope_sq(&self, u: &PLPath, xi: f64) -> f64 {
        let mut acc = 0.0;
        self.for_panels(u, |s, w, _, du| acc += w * (du - self.derivs(s - xi)[1]).powi(2));
        let l = u.params.half_length();
        acc + self.slope_total() - self.slope_sq_below(l - xi) + self.slope_sq_below(-l - xi)
    }

    /// `(⟨u − m_ξ, m'_ξ⟩, ⟨u − m_ξ, m''_ξ⟩)` over ℝ.
    pub fn diff_dots(&self, u: &PLPath, xi: f64) -> (f64, f64) {
        let (mut d1, mut d2) = (0.0, 0.0);
        self.for_panels(u, |s, w, us, _| {
            let [m, dm, ddm] = self.derivs(s - xi);
            d1 += w * (us - m) * dm;
            d2 += w * (us - m) * ddm;
        });
        let l = u.params.half_length();
        let (a, b) = (l - xi, -l - xi);
        let [ma, dma, _] = self.derivs(a);
        let [mb, dmb, _] = self.derivs(b);
        let slope_above = self.slope_total() - self.slope_sq_below(a);
        let slope_below = self.slope_sq_below(b);
        d1 += 0.5 * (1.0 - ma).powi(2) - 0.5 * (1.0 + mb).powi(2);
        d2 += -(1.0 - ma) * dma + slope_above + (-1.0 - mb) * dmb + slope_below;
        (d1, d2)
    }

    /// `sup |u − m_ξ|` over ℝ, sampling each cell at 17 points.
    pub fn diff_linf(&self, u: &PLPath, xi: f64) -> f64 {
        let delta = u.params.mesh();
        let mut best: f64 = 0.0;
        for c in 0..u.n_cells() {
            let s0 = u.cell_start(c);
            let (a, b) = (u.values[c], u.values[c + 1]);
            for k in 0..=16 {
                let t = k as f64 / 16.0;
                best = best.max((a + (b - a) * t - self.value(s0 + t * delta - xi)).abs());
            }
        }
        let l = u.params.half_length();
        best.max(1.0 - self.value(l - xi)).max(1.0 + self.value(-l - xi))
    }

    /// `(⟨v, m'_ξ⟩, ⟨v, m''_ξ⟩)` for a zero-boundary path `v`.
    pub fn zero_dots(&self, v: &PLPath, xi: f64) -> (f64, f64) {
        let (mut d1, mut d2) = (0.0, 0.0);
        self.for_panels(v, |s, w, vs, _| {
            let [_, dm, ddm] = self.derivs(s - xi);
            d1 += w * vs * dm;
            d2 += w * vs * ddm;
        });
        (d1, d2)
    }

    /// `∫ g(s, v(s), v'(s), m_ξ(s)) ds` over `[−L, L]`.
    pub fn integrate_with(&self, v: &PLPath, xi: f64, mut g: impl FnMut(f64, f64, f64, [f64; 3]) -> f64) -> f64 {
        let mut acc = 0.0;
        self.for_panels(v, |s, w, vs, dv| acc += w * g(s, vs, dv, self.derivs(s - xi)));
        acc
    }
}

/// Quintic smoothstep and its derivative.
#[inline]
fn smoothstep5(t: f64) -> (f64, f64) {
    let t = t.clamp(0.0, 1.0);
    let q = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    let dq = 30.0 * t * t * (1.0 - t) * (1.0 - t);
    (q, dq)
}

/// The cutoff profile `m^ε_ξ`: `m_ξ` on the core `|s − ξ| ≤ a` with
/// `a = ε^(−γ₁)`, blended to ±1 over a unit interval on each side as
/// `m + (±1 − m)·q`, with `q` the quintic smoothstep.
#[derive(Debug, Clone, Copy)]
pub struct CutoffProfile<'a> {
    pub profile: &'a InstantonProfile,
    pub xi: f64,
    pub core: f64,
}

fn check_window(params: &ScaleParams, xi: f64) -> Result<()> {
    let w = params.shift_window();
    if !xi.is_finite() || xi.abs() > w {
        return Err(Error::Domain(format!("shift ξ = {xi} outside admissible window [{}, {w}]", -w)));
    }
    Ok(())
}

pub fn cutoff_profile<'a>(p: &'a InstantonProfile, params: &ScaleParams, xi: f64) -> Result<CutoffProfile<'a>> {
    check_window(params, xi)?;
    Ok(CutoffProfile { profile: p, xi, core: params.core_width() })
}

impl CutoffProfile<'_> {
    /// `(m^ε(t), (m^ε)'(t))` in the unshifted coordinate `t = s − ξ`.
    pub fn local(&self, t: f64) -> (f64, f64) {
        let a = self.core;
        if t.abs() <= a {
            let [m, dm, _] = self.profile.derivs(t);
            return (m, dm);
        }
        if t >= a + 1.0 {
            return (1.0, 0.0);
        }
        if t <= -a - 1.0 {
            return (-1.0, 0.0);
        }
        let [m, dm, _] = self.profile.derivs(t);
        if t > 0.0 {
            let (q, dq) = smoothstep5(t - a);
            (m + (1.0 - m) * q, dm * (1.0 - q) + (1.0 - m) * dq)
        } else {
            let (q, dq) = smoothstep5(-a - t);
            (m + (-1.0 - m) * q, dm * (1.0 - q) + (1.0 + m) * dq)
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        self.local(s - self.xi).0
    }

    pub fn slope(&self, s: f64) -> f64 {
        self.local(s - self.xi).1
    }

    /// The slope bound `2·c1·c2·exp(−c2·a)` on the blend zones.
    pub fn blend_slope_bound(&self) -> f64 {
        let p = self.profile;
        2.0 * p.c1 * p.c2 * (-p.c2 * self.core).exp()
    }

    /// Largest slope found on the two blend zones (257 samples each).
    pub fn max_blend_slope(&self) -> f64 {
        let a = self.core;
        (0..=256)
            .map(|k| {
                let t = a + k as f64 / 256.0;
                self.local(t).1.abs().max(self.local(-t).1.abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Grid samples of the cutoff profile.
#[derive(Debug, Clone)]
pub struct DiscretizedProfile {
    pub xi: f64,
    pub path: PLPath,
}

pub fn discretize_profile(p: &InstantonProfile, params: &ScaleParams, xi: f64) -> Result<DiscretizedProfile> {
    let c = cutoff_profile(p, params, xi)?;
    let path = PLPath::from_fn(*params, Boundary::Kink, |s| c.value(s))?;
    Ok(DiscretizedProfile { xi, path })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub l2_cutoff: f64,
    pub h1_cutoff: f64,
    pub l2_disc: f64,
    pub h1_disc: f64,
}

/// Whole-line error norms of the cutoff and discretized profiles against `m_ξ`.
pub fn profile_error_norms(p: &InstantonProfile, params: &ScaleParams, xi: f64) -> Result<ErrorNorms> {
    let c = cutoff_profile(p, params, xi)?;
    let a = c.core;
    let rule = gl10();
    let (mut l2, mut h1) = (0.0, 0.0);
    for lo in [a, -a - 1.0] {
        for k in 0..8 {
            let x0 = lo + k as f64 / 8.0;
            for (t, w) in rule.mapped(x0, x0 + 0.125) {
                let [m, dm, _] = p.derivs(t);
                let (v, dv) = c.local(t);
                l2 += w * (m - v).powi(2);
                h1 += w * (dm - dv).powi(2);
            }
        }
    }
    l2 += p.right_tail_sq(a + 1.0) + p.left_tail_sq(-a - 1.0);
    h1 += p.slope_total() - p.slope_sq_below(a + 1.0) + p.slope_sq_below(-a - 1.0);
    let disc = discretize_profile(p, params, xi)?;
    Ok(ErrorNorms {
        l2_cutoff: l2.sqrt(),
        h1_cutoff: h1.sqrt(),
        l2_disc: p.diff_l2_sq(&disc.path, xi).sqrt(),
        h1_disc: p.diff_slope_sq(&disc.path, xi).sqrt(),
    })
}
