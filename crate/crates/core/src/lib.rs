//! Spectral-Galerkin simulation of renormalized stochastic heat and wave
//! equations on the 2-torus, driven by a cylindrical Brownian motion run on a
//! subordinator clock.

pub mod error;
mod fft;
pub mod linfield;
pub mod pathint;
pub mod quadrature;
pub mod seeds;
pub mod solver;
pub mod spectral;
pub mod subordinator;
pub mod wick;

pub use error::{Error, Result};
