//! Gaussian random fields inside the unit ball.
//!
//! Fields have covariance `C(x, y) = C_r(r_x, r_y) * C_alpha(alpha)`, the product
//! of an exponential radial covariance and an isotropic angular covariance given
//! by a non-negative Legendre spectrum. Realizations are produced by spectral
//! spherical-harmonic sampling whose radial coefficients are correlated with a
//! Cholesky or Karhunen–Loève factor of the radial covariance matrix.

pub mod cli;
pub mod config;
pub mod covariance;
pub mod error;
pub mod grid;
pub mod io;
pub mod parallel;
pub mod radial;
pub mod render;
pub mod rng;
pub mod sampler;
pub mod special;
pub mod validation;

pub use error::{Error, Result};
