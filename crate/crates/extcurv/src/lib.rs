//! Coarse extrinsic curvature of embedded submanifolds.
//!
//! The coarse extrinsic curvature between x₀ and y = exp(δv) is
//! κ = 1 − W₁(μ_{x₀}, μ_y)/‖x₀ − y‖, where μ_x is the uniform measure on the tube
//! segment of normal height σ around the geodesic ε-ball at x. The crate evaluates it
//! three ways: deterministic quadrature with an explicit near-optimal transport map
//! and a dual certificate, exact discrete optimal transport between samples, and
//! Poisson point clouds.
//!
//! Modules:
//! - [`geometry`]: catalogue of submanifolds, frames, Fermi charts, curvature tensors.
//! - [`measures`]: quadrature, Monte Carlo and Poisson constructions of the tube measures.
//! - [`transport`]: exact discrete W₁, the transport map T, upper/lower bounds.
//! - [`estimator`]: curvature estimates, predicted expansions, regime limits.
//! - [`pointcloud`]: empirical curvature from Poisson clouds and convergence studies.

pub mod error;
pub mod estimator;
pub mod geometry;
pub mod measures;
pub mod pointcloud;
pub mod quadrature;
pub mod rng;
pub mod transport;
pub mod vecops;

pub use error::{Error, Result};
