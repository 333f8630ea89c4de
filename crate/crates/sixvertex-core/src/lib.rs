//! Numerics for the six-vertex model in the antiferroelectric regime (Δ < −1).
//!
//! The crate is `no_std` and only needs `alloc`. Layers, bottom up:
//!
//! * [`kernels`]: weights, Δ, the R-matrix and the special functions p, Θ, K, ψ±.
//! * [`xfer`]: matrix-free row-to-row transfer matrices on fixed particle sectors.
//! * [`bethe`]: logarithmic Bethe equations and the transfer-matrix eigenvalue.
//! * [`thermo`]: the contour equation, Fredholm resolvents, free energy and derivatives.
//! * [`commute`]: residuals of the bilinear identities behind Poisson commutativity.
//! * [`flow`]: interpolated free-energy surfaces, Hamiltonian evolution and action minimization.
#![no_std]
#![forbid(unsafe_code)]
// when std is in the dependency graph its inherent float methods shadow num_traits::Float
#![allow(unused_imports)]

extern crate alloc;

pub mod bethe;
pub mod cheb;
pub mod commute;
pub mod error;
pub mod flow;
pub mod kernels;
pub mod linalg;
pub mod quadrature;
pub mod thermo;
pub mod xfer;

pub use error::{Error, Result};
pub use kernels::ModelParams;

/// Complex double used throughout.
pub type C64 = num_complex::Complex<f64>;

pub(crate) const TAU: f64 = core::f64::consts::TAU;
pub(crate) const PI: f64 = core::f64::consts::PI;
pub(crate) const I: C64 = C64::new(0.0, 1.0);
