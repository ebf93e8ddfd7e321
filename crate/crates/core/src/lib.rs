//! Reconstruction of a real potential in three dimensions from its
//! zero-energy generalised scattering amplitude given on the boundary
//! `|Im k| = ρ`, restricted to momenta in the ball `|p| < 2τρ`.
//!
//! The pipeline runs in three stages:
//!
//! 1. [`cauchy`] turns boundary samples into an initial field on the
//!    λ-discs by a Cauchy integral;
//! 2. [`solver`] solves the nonlinear completion equation
//!    `H̃ = H⁰ + M(H̃)` by successive approximations;
//! 3. [`recon`] extracts `v̂` from the λ → 0 and λ → ∞ limits and inverts
//!    the Fourier transform on the ball.
//!
//! [`scatter`] synthesises test data for Gaussian potentials and
//! [`pipeline`] wires everything to configuration files and reports.

pub mod cauchy;
pub mod geometry;
pub mod grid;
pub mod pipeline;
pub mod quadrature;
pub mod recon;
pub mod scatter;
pub mod solver;
pub mod special;

pub use num_complex::Complex64;
