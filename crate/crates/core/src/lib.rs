//! Numerical laboratory for dispersive estimates of `i u_t + (a(x) u_x)_x = 0`
//! with coefficients of bounded variation.

pub mod coefficients;
pub mod counterexample;
pub mod error;
pub mod estimates;
pub mod evolution;
pub mod fourier;
pub mod grid;
pub mod heat_lp;
pub mod linalg;
pub mod norms;
pub mod quadrature;
pub mod resolvent;

pub use error::{Error, Result};
pub use num_complex::Complex64;
