//! Piecewise-linear paths on the node grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ScaleParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// `u(−L) = −1`, `u(L) = 1`, extended by ±1 outside the interval.
    Kink,
    /// `u(±L) = 0`, extended by 0.
    Zero,
}

/// Piecewise-linear function through `2N + 1` node values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PLPath {
    pub params: ScaleParams,
    pub values: Vec<f64>,
    pub boundary: Boundary,
}

impl PLPath {
    pub fn new(params: ScaleParams, values: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if values.len() != params.n_nodes() {
            return Err(Error::InvalidParameter(format!(
                "path has {} values, expected {}",
                values.len(),
                params.n_nodes()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("path has non-finite values".into()));
        }
        let (lo, hi) = match boundary {
            Boundary::Kink => (-1.0, 1.0),
            Boundary::Zero => (0.0, 0.0),
        };
        if values[0] != lo || values[values.len() - 1] != hi {
            return Err(Error::InvalidParameter(format!(
                "boundary values ({}, {}) do not match {boundary:?}",
                values[0],
                values[values.len() - 1]
            )));
        }
        Ok(PLPath { params, values, boundary })
    }

    /// Path from interior values, filling in the boundary.
    pub fn from_interior(params: ScaleParams, interior: &[f64], boundary: Boundary) -> Result<Self> {
        let (lo, hi) = match boundary {
            Boundary::Kink => (-1.0, 1.0),
            Boundary::Zero => (0.0, 0.0),
        };
        let mut values = Vec::with_capacity(interior.len() + 2);
        values.push(lo);
        values.extend_from_slice(interior);
        values.push(hi);
        Self::new(params, values, boundary)
    }

    /// Samples `f` at the interior nodes.
    pub fn from_fn(params: ScaleParams, boundary: Boundary, f: impl Fn(f64) -> f64) -> Result<Self> {
        let interior: Vec<f64> = (1..params.n_nodes() - 1).map(|i| f(params.node(i))).collect();
        Self::from_interior(params, &interior, boundary)
    }

    pub fn interior(&self) -> &[f64] {
        &self.values[1..self.values.len() - 1]
    }

    pub fn n_cells(&self) -> usize {
        self.values.len() - 1
    }

    /// Left endpoint of cell `c`.
    pub fn cell_start(&self, c: usize) -> f64 {
        self.params.node(c)
    }

    /// Outside values: (left, right).
    pub fn tails(&self) -> (f64, f64) {
        match self.boundary {
            Boundary::Kink => (-1.0, 1.0),
            Boundary::Zero => (0.0, 0.0),
        }
    }

    /// Value at `s`, extended by the boundary constants outside `[−L, L]`.
    pub fn eval(&self, s: f64) -> f64 {
        let l = self.params.half_length();
        let (lo, hi) = self.tails();
        if s <= -l {
            return lo;
        }
        if s >= l {
            return hi;
        }
        let delta = self.params.mesh();
        let x = (s + l) / delta;
        let c = (x.floor() as usize).min(self.n_cells() - 1);
        let t = x - c as f64;
        self.values[c] * (1.0 - t) + self.values[c + 1] * t
    }

    /// Positions where the path changes sign (exact for the linear interpolant).
    pub fn zero_crossings(&self) -> Vec<f64> {
        let mut z = Vec::new();
        for c in 0..self.n_cells() {
            let (a, b) = (self.values[c], self.values[c + 1]);
            let s0 = self.cell_start(c);
            if a == 0.0 {
                if z.last().is_none_or(|&p: &f64| (p - s0).abs() > 1e-15) {
                    z.push(s0);
                }
            } else if a * b < 0.0 {
                z.push(s0 + self.params.mesh() * a / (a - b));
            }
        }
        z
    }

    /// Node-wise difference `u − w` as a zero-boundary path.
    pub fn minus(&self, other: &PLPath) -> PLPath {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        PLPath { params: self.params, values, boundary: Boundary::Zero }
    }

    /// `self + t·h` for a zero-boundary `h`.
    pub fn plus_scaled(&self, t: f64, h: &PLPath) -> PLPath {
        let values = self.values.iter().zip(&h.values).map(|(a, b)| a + t * b).collect();
        PLPath { params: self.params, values, boundary: self.boundary }
    }

    /// `∫ u'²` over `[−L, L]` (exact).
    pub fn slope_sq(&self) -> f64 {
        let d = self.params.mesh();
        self.values.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / d
    }

    /// `∫ u²` over `[−L, L]` (exact for piecewise-linear).
    pub fn l2_sq_interval(&self) -> f64 {
        let d = self.params.mesh();
        self.values.windows(2).map(|w| (w[0] * w[0] + w[0] * w[1] + w[1] * w[1]) / 3.0).sum::<f64>() * d
    }

    /// `‖u‖²_{H¹}` for a zero-boundary path.
    pub fn h1_sq(&self) -> f64 {
        self.l2_sq_interval() + self.slope_sq()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_interpolates_and_extends() {
        let p = ScaleParams::with_nodes(0.25, 0.5, 2).unwrap();
        let u = PLPath::from_interior(p, &[-1.0, 0.0, 1.0], Boundary::Kink).unwrap();
        assert_eq!(p.half_length(), 2.0);
        assert!((u.eval(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(u.eval(5.0), 1.0);
        assert_eq!(u.eval(-5.0), -1.0);
        assert_eq!(u.zero_crossings(), vec![0.0]);
    }

    #[test]
    fn boundary_is_enforced() {
        let p = ScaleParams::with_nodes(0.25, 0.5, 2).unwrap();
        assert!(PLPath::new(p, vec![0.0, 0.0, 0.0, 0.0, 1.0], Boundary::Kink).is_err());
    }
}
