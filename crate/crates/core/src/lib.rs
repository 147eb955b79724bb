//! Pseudo-spectral simulation of the spectrally truncated cubic wave equation
//! `u_tt - Laplacian u + S_N((S_N u)^3) = 0` on the d-torus, with randomized
//! Fourier initial data and the diagnostics that accompany it.

pub mod error;
pub mod galerkin;
pub mod propagator;
pub mod randomization;
pub mod spectral;
pub mod statistics;

pub use error::{Error, Result};
