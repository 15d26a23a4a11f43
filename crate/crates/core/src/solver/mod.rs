//! Exact Airy flow and the dealiased exponential time stepper for
//! `u_t + u_xxx + (u^p)_x = 0`.

pub mod conserved;
mod propagate;
mod sponge;
mod stepper;

pub use conserved::{energy, mass, relative_drift, ConservedSample};
pub use propagate::{airy_propagate, group_velocity, return_horizon, wrap_horizon, RETURN_TAIL_FRACTION, WRAP_MASS_FRACTION};
pub use sponge::{apply_sponge, Sponge};
pub use stepper::{evolve, evolve_with, project_retained, step, Run, RunState, SolverConfig, Stepper, TimeScheme};
