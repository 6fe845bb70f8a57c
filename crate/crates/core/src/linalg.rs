//! Symmetric tridiagonal matrices: solves, Cholesky, log-determinants and
//! the two eigensolvers used by the spectral checks.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix stored as diagonal and off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// Lower bidiagonal Cholesky factor: `A = L L^T`.
#[derive(Debug, Clone)]
pub struct TriCholesky {
    pub diag: Vec<f64>,
    pub sub: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1), "off-diagonal length mismatch");
        SymTridiag { diag, off }
    }

    /// Constant-coefficient matrix `tridiag(b, a, b)` of size n.
    pub fn toeplitz(n: usize, a: f64, b: f64) -> Self {
        SymTridiag { diag: vec![a; n], off: vec![b; n.saturating_sub(1)] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &SymTridiag, beta: f64) -> SymTridiag {
        SymTridiag {
            diag: self.diag.iter().zip(&other.diag).map(|(a, b)| alpha * a + beta * b).collect(),
            off: self.off.iter().zip(&other.off).map(|(a, b)| alpha * a + beta * b).collect(),
        }
    }

    pub fn scaled(&self, alpha: f64) -> SymTridiag {
        SymTridiag {
            diag: self.diag.iter().map(|a| a * alpha).collect(),
            off: self.off.iter().map(|a| a * alpha).collect(),
        }
    }

    pub fn shifted(&self, sigma: f64) -> SymTridiag {
        SymTridiag { diag: self.diag.iter().map(|a| a + sigma).collect(), off: self.off.clone() }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    pub fn cholesky(&self) -> Result<TriCholesky> {
        let n = self.len();
        let mut diag = vec![0.0; n];
        let mut sub = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let mut d = self.diag[i];
            if i > 0 {
                sub[i - 1] = self.off[i - 1] / diag[i - 1];
                d -= sub[i - 1] * sub[i - 1];
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::numeric(format!("matrix not positive definite at row {i}")));
            }
            diag[i] = d.sqrt();
        }
        Ok(TriCholesky { diag, sub })
    }

    /// Log-determinant via the LDL^T recurrence; requires positive definiteness.
    pub fn log_det(&self) -> Result<f64> {
        Ok(2.0 * self.cholesky()?.diag.iter().map(|d| d.ln()).sum::<f64>())
    }

    /// Solves `(self) x = rhs` with the Thomas algorithm.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        solve_tridiagonal(&self.off, &self.diag, &self.off, rhs)
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.len() {
            let b2 = if i > 0 { self.off[i - 1] * self.off[i - 1] } else { 0.0 };
            q = self.diag[i] - x - if i > 0 { b2 / q } else { 0.0 };
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + x.abs() + 1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin bounds on the spectrum.
    pub fn spectrum_bounds(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// k-th smallest eigenvalue (0-based) by bisection on the Sturm count.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.spectrum_bounds();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvector for an eigenvalue already located to high accuracy.
    pub fn eigenvector(&self, lambda: f64) -> Result<Vec<f64>> {
        let n = self.len();
        let scale = self.spectrum_bounds().1.abs().max(1.0);
        let shifted = self.shifted(-(lambda - 1e-10 * scale));
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 13) as f64).collect();
        normalize(&mut x);
        for _ in 0..4 {
            x = shifted.solve(&x)?;
            normalize(&mut x);
        }
        Ok(x)
    }
}

impl TriCholesky {
    /// Solves `L^T x = z`; with `z` standard normal, `x` has covariance `A^{-1}`.
    pub fn solve_upper(&self, z: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut r = z[i];
            if i + 1 < n {
                r -= self.sub[i] * x[i + 1];
            }
            x[i] = r / self.diag[i];
        }
        x
    }
}

/// Thomas algorithm for a general tridiagonal system.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let a = if i > 0 { sub[i - 1] } else { 0.0 };
        let denom = diag[i] - if i > 0 { a * c[i - 1] } else { 0.0 };
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::numeric(format!("zero pivot in tridiagonal solve at row {i}")));
        }
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - if i > 0 { a * d[i - 1] } else { 0.0 }) / denom;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &mut [f64]) {
    let n = norm(a);
    if n > 0.0 {
        a.iter_mut().for_each(|x| *x /= n);
    }
}

/// Smallest Rayleigh quotient of `a` over vectors orthogonal to `w`.
///
/// Inverse iteration on the bordered system `[(A + shift) w; w^T 0]`, where
/// `shift` must make `A + shift` positive definite. Returns the quotient, the
/// minimizing vector and the per-iteration quotient trace.
pub fn constrained_min_eigen(
    a: &SymTridiag,
    w: &[f64],
    shift: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let n = a.len();
    let shifted = a.shifted(shift);
    let aw = shifted.solve(w)?;
    let w_aw = dot(w, &aw);
    let project = |y: &[f64]| -> Result<Vec<f64>> {
        let ay = shifted.solve(y)?;
        let mu = dot(w, &ay) / w_aw;
        Ok(ay.iter().zip(&aw).map(|(p, q)| p - mu * q).collect())
    };
    let ww = dot(w, w);
    let mut x: Vec<f64> = (0..n).map(|i| ((i as f64 + 0.5) * 0.37).sin() + 0.1).collect();
    let c = dot(&x, w) / ww;
    x.iter_mut().zip(w).for_each(|(xi, wi)| *xi -= c * wi);
    normalize(&mut x);
    let mut trace = Vec::new();
    let mut prev = f64::INFINITY;
    for _ in 0..max_iter {
        x = project(&x)?;
        let c = dot(&x, w) / ww;
        x.iter_mut().zip(w).for_each(|(xi, wi)| *xi -= c * wi);
        normalize(&mut x);
        let rq = a.quad_form(&x);
        trace.push(rq);
        if (rq - prev).abs() <= tol * rq.abs().max(1.0) {
            return Ok((rq, x, trace));
        }
        prev = rq;
    }
    Err(Error::Numeric { message: "constrained inverse iteration did not converge".into(), trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_determinant_and_spectrum() {
        // tridiag(-1, 2, -1) of size n has determinant n + 1 and
        // eigenvalues 2 - 2 cos(k pi / (n + 1)).
        let n = 9;
        let t = SymTridiag::toeplitz(n, 2.0, -1.0);
        assert!((t.log_det().unwrap() - ((n + 1) as f64).ln()).abs() < 1e-13);
        for k in 0..n {
            let exact = 2.0 - 2.0 * (((k + 1) as f64) * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((t.eigenvalue(k) - exact).abs() < 1e-12);
        }
        let v = t.eigenvector(t.eigenvalue(0)).unwrap();
        let av = t.mul_vec(&v);
        let lam = t.eigenvalue(0);
        assert!(av.iter().zip(&v).all(|(a, b)| (a - lam * b).abs() < 1e-10));
    }

    #[test]
    fn determinant_scales_with_dimension() {
        let a = SymTridiag::new(vec![3.0, 4.0, 5.0], vec![1.0, -0.5]);
        let xi = 2.5;
        let lhs = a.scaled(xi).log_det().unwrap();
        assert!((lhs - (a.log_det().unwrap() + 3.0 * xi.ln())).abs() < 1e-13);
    }

    #[test]
    fn thomas_matches_multiplication() {
        let a = SymTridiag::new(vec![4.0, 5.0, 6.0, 7.0], vec![1.0, 2.0, -1.0]);
        let x = vec![1.0, -2.0, 0.5, 3.0];
        let b = a.mul_vec(&x);
        let y = a.solve(&b).unwrap();
        assert!(x.iter().zip(&y).all(|(p, q)| (p - q).abs() < 1e-13));
    }

    #[test]
    fn constrained_minimum_skips_deflated_vector() {
        let n = 50;
        let t = SymTridiag::toeplitz(n, 2.0, -1.0);
        let w = t.eigenvector(t.eigenvalue(0)).unwrap();
        let (rq, x, _) = constrained_min_eigen(&t, &w, 1.0, 1e-14, 10_000).unwrap();
        assert!((rq - t.eigenvalue(1)).abs() < 1e-9, "{rq} vs {}", t.eigenvalue(1));
        assert!(dot(&x, &w).abs() < 1e-10);
    }
}
