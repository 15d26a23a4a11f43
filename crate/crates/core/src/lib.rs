//! Pseudo-spectral laboratory for the quartic generalised KdV equation
//! `u_t + u_xxx + (u⁴)_x = 0` on a periodic box.
//!
//! The crate is organised bottom-up: [`spectral`] holds the grid and Fourier
//! machinery, [`solver`] the exact Airy flow and the nonlinear stepper,
//! [`soliton`] and [`modulation`] the soliton family and the fitted
//! decomposition `u = R + w`, [`norms`] the dispersive norms and estimate
//! functionals, [`scattering`] the scattering diagnostics and
//! [`experiments`] the configuration-driven runner behind the CLI.

pub mod error;
pub mod experiments;
pub mod modulation;
pub mod norms;
pub mod report;
pub mod scattering;
pub mod soliton;
pub mod solver;
pub mod spectral;

pub use error::{GkdvError, Result};
pub use report::{Report, ReportEntry};
