//! Exponent and mesh bookkeeping for the stretched interval `[−L, L]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scale parameters: `L = ε^(−γ)`, mesh `δ = L/N`, nodes `s_k = kδ` for `k = −N..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub epsilon: f64,
    pub gamma: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub n: usize,
}

/// Lists every violated constraint, each message quoting the inequality.
pub fn check_exponents(epsilon: f64, gamma: f64, gamma1: f64, gamma2: f64) -> Vec<String> {
    let mut v = Vec::new();
    if !(epsilon > 0.0 && epsilon < 1.0) {
        v.push(format!("Assume 0<ε<1 (got ε={epsilon})"));
    }
    if !(gamma > 0.0 && gamma < 2.0 / 3.0) {
        v.push(format!("Assume 0<γ<2/3 (got γ={gamma})"));
    }
    if !(gamma1 > 0.0 && gamma1 < gamma) {
        v.push(format!("Assume 0<γ₁<γ (got γ₁={gamma1}, γ={gamma})"));
    }
    if !(-gamma1 - gamma / 2.0 + gamma2 > 0.0) {
        v.push(format!("Assume −γ₁−γ/2+γ₂>0 (got {:.6})", -gamma1 - gamma / 2.0 + gamma2));
    }
    if !(-gamma - gamma1 / 2.0 + gamma2 > 0.0) {
        v.push(format!("Assume −γ−γ₁/2+γ₂>0 (got {:.6})", -gamma - gamma1 / 2.0 + gamma2));
    }
    if !(gamma2 < 1.0) {
        v.push(format!("Assume γ₂<1 (got γ₂={gamma2})"));
    }
    if !(gamma2 > gamma) {
        v.push(format!("Assume γ₂>γ (got γ₂={gamma2}, γ={gamma})"));
    }
    v
}

impl ScaleParams {
    /// Validated parameters; `n = None` derives `N = ceil(ε^(−γ₂))`.
    pub fn new(epsilon: f64, gamma: f64, gamma1: f64, gamma2: f64, n: Option<usize>) -> Result<Self> {
        let mut violations = check_exponents(epsilon, gamma, gamma1, gamma2);
        if n == Some(0) {
            violations.push("Assume N≥1 (got N=0)".into());
        }
        if !violations.is_empty() {
            return Err(Error::Constraint(violations));
        }
        let n = n.unwrap_or_else(|| epsilon.powf(-gamma2).ceil() as usize);
        Ok(ScaleParams { epsilon, gamma, gamma1, gamma2, n })
    }

    /// Parameters with an explicit node count; `γ₁ = γ/4` and `γ₂` midway
    /// between the binding lower constraint and 1.
    pub fn with_nodes(epsilon: f64, gamma: f64, n: usize) -> Result<Self> {
        let gamma1 = gamma / 4.0;
        let gamma2 = 0.5 * ((gamma + gamma1 / 2.0).max(gamma1 + gamma / 2.0) + 1.0);
        Self::new(epsilon, gamma, gamma1, gamma2, Some(n))
    }

    /// Default exponents of [`ScaleParams::with_nodes`] with `N = ceil(ε^(−γ₂))`.
    pub fn auto(epsilon: f64, gamma: f64) -> Result<Self> {
        let gamma1 = gamma / 4.0;
        let gamma2 = 0.5 * ((gamma + gamma1 / 2.0).max(gamma1 + gamma / 2.0) + 1.0);
        Self::new(epsilon, gamma, gamma1, gamma2, None)
    }

    /// Half-length `L = ε^(−γ)`.
    pub fn half_length(&self) -> f64 {
        self.epsilon.powf(-self.gamma)
    }

    /// Mesh `δ = L/N`.
    pub fn mesh(&self) -> f64 {
        self.half_length() / self.n as f64
    }

    /// Core half-width `ε^(−γ₁)` of the cutoff profile.
    pub fn core_width(&self) -> f64 {
        self.epsilon.powf(-self.gamma1)
    }

    pub fn n_nodes(&self) -> usize {
        2 * self.n + 1
    }

    /// Position of node index `i` in `0..=2N`.
    pub fn node(&self, i: usize) -> f64 {
        let n = self.n as i64;
        if i as i64 == 2 * n {
            return self.half_length();
        }
        (i as i64 - n) as f64 * self.mesh()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.node(i)).collect()
    }

    /// Admissible shift window `|ξ| ≤ L − ε^(−γ₁) − 1`, clamped at 0.
    pub fn shift_window(&self) -> f64 {
        (self.half_length() - self.core_width() - 1.0).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_n_and_geometry() {
        let p = ScaleParams::new(0.2, 0.3, 0.1, 0.5, None).unwrap();
        assert_eq!(p.n, 3);
        assert!((p.half_length() - 0.2f64.powf(-0.3)).abs() < 1e-15);
        assert!((p.node(0) + p.half_length()).abs() < 1e-14);
        assert_eq!(p.node(6), p.half_length());
    }

    #[test]
    fn all_violations_are_listed() {
        let e = ScaleParams::new(0.2, 0.7, 0.8, 1.2, None).unwrap_err();
        let Error::Constraint(v) = e else { panic!() };
        assert!(v.iter().any(|m| m.contains("0<γ<2/3")));
        assert!(v.iter().any(|m| m.contains("γ₂<1")));
        assert!(v.len() >= 3);
    }

    #[test]
    fn with_nodes_is_admissible() {
        for g in [0.05, 0.3, 0.6, 0.66] {
            assert!(ScaleParams::with_nodes(0.1, g, 4).is_ok(), "γ={g}");
        }
    }
}
