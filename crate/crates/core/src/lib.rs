//! Spectral toolkit for stochastic heat equations driven by space-time white
//! noise and for the Gaussian free fields that arise as their stationary laws.
//!
//! The crate is organised bottom-up:
//!
//! * [`quadrature`] and [`special`]: Gauss rules, adaptive Gauss–Kronrod,
//!   Γ, modified Bessel functions and Hermite functions.
//! * [`basis`]: ordered eigen-systems (interval and box Laplacians, the
//!   Hermite operator `-Δ + |x|²`).
//! * [`hilbert_scale`]: weighted coefficient norms, scale maps and pairings.
//! * [`greens`]: heat kernels, potentials and Green's function series.
//! * [`fields`]: Gaussian free field, cylindrical Brownian motion, Brownian
//!   bridge and two-sided Brownian motion samplers.
//! * [`dynamics`]: exact Ornstein–Uhlenbeck mode evolution.
//! * [`fourier_cov`]: Fourier-domain covariance functionals on `R^d`.
//! * [`stats`]: covariance estimation, z-scores and KS tests.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod fourier_cov;
pub mod greens;
pub mod hilbert_scale;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stats;

pub use basis::{BasisKind, BoundaryCondition, EigenBasis};
pub use error::{Error, Result};
pub use hilbert_scale::CoefficientField;
pub use rng::RngStream;
