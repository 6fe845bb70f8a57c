//! Gaussian reference measures on the node grid: the Brownian bridge from
//! −1 to 1, its per-cell refinement bridges and the discrete massive free
//! field, with normalizers and tail statistics.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::SymTridiag;
use crate::params::ScaleParams;
use crate::path::{Boundary, PLPath};
use crate::rng::stream;
use crate::stats::binomial_se;

/// Bridge with mean `s ↦ ε^γ s` and covariance `ε(s∧s' + L − (s+L)(s'+L)/(2L))`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BridgeSpec {
    pub params: ScaleParams,
}

impl BridgeSpec {
    pub fn new(params: ScaleParams) -> Self {
        BridgeSpec { params }
    }

    pub fn mean_slope(&self) -> f64 {
        self.params.epsilon.powf(self.params.gamma)
    }

    pub fn variance_scale(&self) -> f64 {
        self.params.epsilon
    }

    pub fn mean(&self, s: f64) -> f64 {
        self.mean_slope() * s
    }

    pub fn kernel(&self, s: f64, t: f64) -> f64 {
        let l = self.params.half_length();
        self.params.epsilon * (s.min(t) + l - (s + l) * (t + l) / (2.0 * l))
    }
}

fn normals<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Exact node sample: conditioned random walk, scaled by `√ε`, plus the mean path.
pub fn sample_bridge<R: Rng + ?Sized>(spec: &BridgeSpec, rng: &mut R) -> PLPath {
    let p = spec.params;
    let n = p.n_nodes();
    let cells = n - 1;
    let sd = (p.epsilon * p.mesh()).sqrt();
    let mut walk = vec![0.0; n];
    for k in 1..n {
        walk[k] = walk[k - 1] + sd * rng.sample::<f64, _>(StandardNormal);
    }
    let end = walk[cells];
    let mut values: Vec<f64> = (0..n)
        .map(|k| spec.mean(p.node(k)) + walk[k] - end * k as f64 / cells as f64)
        .collect();
    values[0] = -1.0;
    values[cells] = 1.0;
    PLPath { params: p, values, boundary: Boundary::Kink }
}

fn log_gauss_kernel(var: f64, d: f64) -> f64 {
    -0.5 * (2.0 * PI * var).ln() - d * d / (2.0 * var)
}

/// Log density of the interior node vector: transition kernels over each
/// cell minus the endpoint kernel from −1 at −L to 1 at L.
pub fn log_density(spec: &BridgeSpec, u: &PLPath) -> Result<f64> {
    if u.boundary != Boundary::Kink {
        return Err(Error::Domain("bridge density needs endpoints ±1".into()));
    }
    let p = spec.params;
    let var = p.epsilon * p.mesh();
    let chain: f64 = u.values.windows(2).map(|w| log_gauss_kernel(var, w[1] - w[0])).sum();
    Ok(chain - log_gauss_kernel(p.epsilon * 2.0 * p.half_length(), 2.0))
}

/// `log` of the density prefactor `C` in `C·exp(−(1/2ε) Σ (Δx)²/δ)`, from
/// the transition normalizers.
pub fn log_normalizer_kernels(params: &ScaleParams) -> f64 {
    let cells = (params.n_nodes() - 1) as f64;
    let var = params.epsilon * params.mesh();
    -0.5 * cells * (2.0 * PI * var).ln() - log_gauss_kernel(params.epsilon * 2.0 * params.half_length(), 2.0)
}

/// Bridge precision `ε⁻¹·(−Δ_N)` on interior nodes, `−Δ_N = tridiag(−1, 2, −1)/δ`.
pub fn bridge_precision(params: &ScaleParams) -> SymTridiag {
    let n = params.n_nodes() - 2;
    let d = params.mesh();
    SymTridiag::toeplitz(n, 2.0 / d, -1.0 / d).scaled(1.0 / params.epsilon)
}

/// The same prefactor from `(2π)^{−(2N−1)/2}·exp(ε^{γ−1})·det(ε⁻¹(−Δ_N))^{1/2}`.
pub fn log_normalizer_determinant(params: &ScaleParams) -> Result<f64> {
    let n = (params.n_nodes() - 2) as f64;
    let e = params.epsilon;
    Ok(-0.5 * n * (2.0 * PI).ln() + e.powf(params.gamma - 1.0) + 0.5 * bridge_precision(params).log_det()?)
}

/// Brownian-bridge deviation (variance rate `ε`) at `M` equispaced interior
/// points of a cell of length `δ`.
pub fn cell_bridge<R: Rng + ?Sized>(epsilon: f64, delta: f64, m: usize, rng: &mut R) -> Vec<f64> {
    let h = delta / (m + 1) as f64;
    let sd = (epsilon * h).sqrt();
    let mut w = Vec::with_capacity(m + 1);
    let mut acc = 0.0;
    for _ in 0..=m {
        acc += sd * rng.sample::<f64, _>(StandardNormal);
        w.push(acc);
    }
    let end = acc;
    (0..m).map(|j| w[j] - end * (j + 1) as f64 / (m + 1) as f64).collect()
}

/// Path values at `M` equispaced interior points of cell `k`: linear
/// interpolant plus an independent bridge.
pub fn refine<R: Rng + ?Sized>(u: &PLPath, cell: usize, m: usize, rng: &mut R) -> Result<Vec<f64>> {
    if cell >= u.n_cells() {
        return Err(Error::InvalidParameter(format!("cell {cell} out of range 0..{}", u.n_cells())));
    }
    let (a, b) = (u.values[cell], u.values[cell + 1]);
    let dev = cell_bridge(u.params.epsilon, u.params.mesh(), m, rng);
    Ok(dev
        .iter()
        .enumerate()
        .map(|(j, d)| a + (b - a) * (j + 1) as f64 / (m + 1) as f64 + d)
        .collect())
}

/// Unbiased estimate of `∫_cell b²` from `M` interior bridge values: the
/// trapezoid sum plus its expected deficit `εh²/6`.
pub fn cell_l2_sq_estimate(dev: &[f64], epsilon: f64, delta: f64) -> f64 {
    let h = delta / (dev.len() + 1) as f64;
    h * dev.iter().map(|x| x * x).sum::<f64>() + epsilon * h * h / 6.0
}

/// Zero-boundary field with density `∝ exp(−κ/(2ε) ∫ u² + u'²)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MassiveFieldSpec {
    pub params: ScaleParams,
    pub kappa: f64,
}

/// `∫ u² + u'²` on interior nodes: mass `δ/6·{1,4,1}` plus stiffness `{−1,2,−1}/δ`.
pub fn h1_form(params: &ScaleParams) -> SymTridiag {
    let n = params.n_nodes() - 2;
    let d = params.mesh();
    SymTridiag::toeplitz(n, 4.0 * d / 6.0 + 2.0 / d, d / 6.0 - 1.0 / d)
}

impl MassiveFieldSpec {
    pub fn new(params: ScaleParams, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa = {kappa} must be positive")));
        }
        Ok(MassiveFieldSpec { params, kappa })
    }

    pub fn precision(&self) -> SymTridiag {
        h1_form(&self.params).scaled(self.kappa / self.params.epsilon)
    }
}

pub fn sample_massive_field<R: Rng + ?Sized>(spec: &MassiveFieldSpec, rng: &mut R) -> PLPath {
    let chol = spec.precision().cholesky().expect("H¹ form is positive definite");
    let z = normals(rng, chol.diag.len());
    let x = chol.solve_upper(&z);
    PLPath::from_interior(spec.params, &x, Boundary::Zero).expect("finite sample")
}

/// Normalizers of the bridge and massive reference measures on interior nodes.
#[derive(Debug, Clone, Serialize)]
pub struct ZRatios {
    /// `log ∫ exp(−(1/2ε) ∫ u'²)` over zero-boundary node vectors, via determinant.
    pub log_z1: f64,
    /// The same, via products of transition normalizers.
    pub log_z1_kernels: f64,
    /// `log ∫ exp(−κ/(2ε) ∫ u² + u'²)`.
    pub log_z2: f64,
    pub log_ratio: f64,
    /// `det(−Δ_N) ≤ det(Id − Δ_N)`.
    pub poincare_lo: bool,
    /// `det(Id − Δ_N) ≤ (1 + 2ε^{−γ}/π)^{2N} det(−Δ_N)`.
    pub poincare_hi: bool,
    /// `d log Z₁ / d log ε` on a fixed grid, exactly `(2N − 1)/2`.
    pub eps_exponent: f64,
}

pub fn z_ratios(params: &ScaleParams, kappa: f64) -> Result<ZRatios> {
    if params.n > 64 {
        return Err(Error::InvalidParameter(format!("N = {} exceeds 64 for determinant ratios", params.n)));
    }
    let n = (params.n_nodes() - 2) as f64;
    let gauss = |a: &SymTridiag| -> Result<f64> { Ok(0.5 * n * (2.0 * PI).ln() - 0.5 * a.log_det()?) };
    let k = bridge_precision(params);
    let log_z1 = gauss(&k)?;
    let var = params.epsilon * params.mesh();
    let cells = n + 1.0;
    // ∫ Π p_δ(Δx) dx = p_{2L}(0), each kernel carrying a (2πεδ)^{-1/2} prefactor
    let log_z1_kernels = 0.5 * cells * (2.0 * PI * var).ln() + log_gauss_kernel(params.epsilon * 2.0 * params.half_length(), 0.0);
    let m = MassiveFieldSpec::new(*params, kappa)?;
    let log_z2 = gauss(&m.precision())?;
    let ldk = SymTridiag::toeplitz(n as usize, 2.0, -1.0).log_det()? - n * params.mesh().ln();
    let ldm = h1_form(params).log_det()?;
    let hi = 2.0 * params.n as f64 * (1.0 + 2.0 * params.half_length() / PI).ln();
    // ε enters the precision only as 1/ε once the grid is held fixed
    let bump = |e: f64| -> Result<f64> { gauss(&k.scaled(params.epsilon / e)) };
    let h = 1e-4;
    let e = params.epsilon;
    let eps_exponent = (bump(e * (1.0 + h))? - bump(e * (1.0 - h))?) / ((1.0 + h).ln() - (1.0 - h).ln());
    Ok(ZRatios {
        log_z1,
        log_z1_kernels,
        log_z2,
        log_ratio: log_z2 - log_z1,
        poincare_lo: ldk <= ldm,
        poincare_hi: ldm <= ldk + hi,
        eps_exponent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundName {
    WholeLineL2,
    ShortIntervalL2,
    WholeLineLinf,
    MassiveH1,
}

impl BoundName {
    pub fn label(self) -> &'static str {
        match self {
            BoundName::WholeLineL2 => "whole-line-L2",
            BoundName::ShortIntervalL2 => "short-interval-L2",
            BoundName::WholeLineLinf => "whole-line-Linf",
            BoundName::MassiveH1 => "massive-H1",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub bound_name: BoundName,
    pub centering: f64,
    pub r_grid: Vec<f64>,
    pub empirical_p: Vec<f64>,
    pub theoretical_p: Vec<f64>,
    pub n_samples: usize,
    /// Sample mean of the squared statistic.
    pub mean_sq: f64,
}

impl ConcentrationReport {
    fn build(bound_name: BoundName, centering: f64, r_grid: Vec<f64>, stats: &[f64], bound: impl Fn(f64) -> f64) -> Self {
        let n = stats.len();
        let empirical_p = r_grid
            .iter()
            .map(|r| stats.iter().filter(|&&x| x >= centering + r).count() as f64 / n as f64)
            .collect();
        let theoretical_p = r_grid.iter().map(|&r| bound(r)).collect();
        let mean_sq = stats.iter().map(|x| x * x).sum::<f64>() / n as f64;
        ConcentrationReport { bound_name, centering, r_grid, empirical_p, theoretical_p, n_samples: n, mean_sq }
    }

    /// Entries where the empirical tail exceeds the bound by more than three
    /// binomial standard errors (evaluated at the bound, clipped to [0, 1]).
    pub fn violations(&self) -> Vec<usize> {
        (0..self.r_grid.len())
            .filter(|&i| {
                let t = self.theoretical_p[i].min(1.0);
                self.empirical_p[i] > t + 3.0 * binomial_se(t, self.n_samples)
            })
            .collect()
    }

    pub fn dominated(&self) -> bool {
        self.violations().is_empty()
    }
}

/// Ten-point grid on which `bound` falls from about 1 to about 1e−4.
fn default_grid(r_one: f64, r_small: f64) -> Vec<f64> {
    (1..=10).map(|j| r_one + (r_small - r_one) * (j - 1) as f64 / 9.0).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscretizationTails {
    pub whole_l2: ConcentrationReport,
    pub short_l2: ConcentrationReport,
    pub whole_linf: ConcentrationReport,
    /// `ε^{1−2γ}/(3N)`.
    pub expected_l2_sq: f64,
    /// Largest eigenvalue `ε(ε^{−γ}/(πN))²` of a cell bridge covariance.
    pub sigma_sq: f64,
}

/// Tail probabilities of `u − u^N` in three norms over `n_samples`
/// independent refinements with `m` points per cell.
pub fn discretization_tails(params: &ScaleParams, n_samples: usize, m: usize, seed: u64) -> Result<DiscretizationTails> {
    if m < 8 {
        return Err(Error::InvalidParameter(format!("refinement needs at least 8 points per cell, got {m}")));
    }
    let e = params.epsilon;
    let delta = params.mesh();
    let cells = params.n_nodes() - 1;
    let mid = cells / 2;
    let samples: Vec<(f64, f64, f64)> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, &[0x6469_7363, i as u64]);
            let (mut whole, mut short, mut sup) = (0.0, 0.0, 0.0f64);
            for c in 0..cells {
                let dev = cell_bridge(e, delta, m, &mut rng);
                let q = cell_l2_sq_estimate(&dev, e, delta);
                whole += q;
                if c == mid {
                    short = q;
                }
                sup = dev.iter().fold(sup, |a, x| a.max(x.abs()));
            }
            (whole.max(0.0).sqrt(), short.max(0.0).sqrt(), sup)
        })
        .collect();
    let n = params.n as f64;
    let s = e.powf(1.0 - 2.0 * params.gamma);
    let l2_rate = PI * PI * n * n / s;
    let l2_bound = move |r: f64| (-r * r * l2_rate).exp();
    let l2_grid = default_grid(0.0, (1e4f64.ln() / l2_rate).sqrt());
    let g = e.powf(1.0 - params.gamma);
    let linf_bound = move |r: f64| 4.0 * n * (-r * r * n / (8.0 * g)).exp();
    let linf_grid = default_grid((8.0 * g * (4.0 * n).ln() / n).sqrt(), (8.0 * g * (4e4 * n).ln() / n).sqrt());
    let pick = |f: fn(&(f64, f64, f64)) -> f64| samples.iter().map(f).collect::<Vec<f64>>();
    Ok(DiscretizationTails {
        whole_l2: ConcentrationReport::build(BoundName::WholeLineL2, (s / (3.0 * n)).sqrt(), l2_grid.clone(), &pick(|x| x.0), l2_bound),
        short_l2: ConcentrationReport::build(BoundName::ShortIntervalL2, (s / (6.0 * n * n)).sqrt(), l2_grid, &pick(|x| x.1), l2_bound),
        whole_linf: ConcentrationReport::build(BoundName::WholeLineLinf, 0.0, linf_grid, &pick(|x| x.2), linf_bound),
        expected_l2_sq: s / (3.0 * n),
        sigma_sq: e * (params.half_length() / (PI * n)).powi(2),
    })
}

/// Tail of `‖u‖_{H¹}` under the massive field against `exp(−κr²/(2ε))`,
/// centered at `√((2N − 1)ε/κ)`, the root of the exact second moment.
pub fn massive_h1_tail(spec: &MassiveFieldSpec, n_samples: usize, seed: u64) -> ConcentrationReport {
    let form = h1_form(&spec.params);
    let stats: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, &[0x6d61_7373, i as u64]);
            let u = sample_massive_field(spec, &mut rng);
            form.quad_form(u.interior()).sqrt()
        })
        .collect();
    let ratio = spec.params.epsilon / spec.kappa;
    let dim = (spec.params.n_nodes() - 2) as f64;
    let grid = default_grid(0.0, (2.0 * ratio * 1e4f64.ln()).sqrt());
    ConcentrationReport::build(BoundName::MassiveH1, (dim * ratio).sqrt(), grid, &stats, |r| (-r * r / (2.0 * ratio)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_at_origin() {
        let p = ScaleParams::with_nodes(0.1, 0.4, 16).unwrap();
        let b = BridgeSpec::new(p);
        assert!((b.kernel(0.0, 0.0) - 0.1f64.powf(0.6) / 2.0).abs() < 1e-14);
        assert_eq!(b.kernel(-p.half_length(), 0.3), 0.0);
    }

    #[test]
    fn normalizer_routes_agree() {
        for n in [1, 2, 4, 8] {
            let p = ScaleParams::with_nodes(0.2, 0.3, n).unwrap();
            let a = log_normalizer_kernels(&p);
            let b = log_normalizer_determinant(&p).unwrap();
            assert!((a - b).abs() < 1e-10, "N={n}: {a} vs {b}");
        }
    }
}
