//! Zeros of Gaussian analytic functions on the unit disc whose coefficient
//! covariance is the inverse of a hermitian positive-definite Toeplitz matrix.
//!
//! The crate builds the covariance kernels of such functions (closed forms
//! where they exist, truncated series otherwise), samples their coefficients,
//! locates their zeros, and checks the zero statistics against the Bergman
//! determinantal law both exactly (joint intensities from the kernel) and by
//! Monte Carlo.
//!
//! Module map:
//!
//! - [`toeplitz`]: autocovariances, finite truncations, Cholesky, inverses.
//! - [`spectral`]: spectral densities, Hurwitz zeta, Fourier coefficients of `1/φ`.
//! - [`kernels`]: Szegő/Bergman kernels, `K_G`, Möbius maps, conditioning.
//! - [`orthopoly`]: orthonormal polynomials from the Cholesky factor.
//! - [`sampling`]: reproducible complex Gaussian coefficient draws.
//! - [`gaf`]: truncated functions and their zeros.
//! - [`intensity`]: joint intensities via permanents and the Bergman target.
//! - [`experiments`]: the Monte Carlo harness.

pub mod config;
pub mod error;
pub mod experiments;
pub mod gaf;
pub mod intensity;
pub mod kernels;
pub mod linalg;
pub mod model;
pub mod orthopoly;
pub mod output;
pub mod quadrature;
pub mod sampling;
pub mod spectral;
pub mod toeplitz;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use model::{CovarianceMode, ModelSpec};
pub use num_complex::Complex64;

/// Version string stamped into every output file header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
