//! Numerical laboratory for the invariant measure of the one-dimensional
//! stochastic Allen-Cahn equation: double-well potentials, instantons, the
//! Ginzburg-Landau energy landscape, Gaussian reference measures, Gibbs
//! sampling and a semi-implicit SPDE integrator.

pub mod criteria;
pub mod energy;
pub mod error;
pub mod gaussian;
pub mod gibbs;
pub mod instanton;
pub mod linalg;
pub mod params;
pub mod path;
pub mod potential;
pub mod quadrature;
pub mod rng;
pub mod spde;
pub mod stats;

pub use error::{Error, Result};
pub use instanton::InstantonProfile;
pub use params::ScaleParams;
pub use path::{Boundary, PLPath};
pub use potential::{Potential, PotentialSpec};
