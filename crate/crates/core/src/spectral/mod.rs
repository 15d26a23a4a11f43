//! Periodic grid, fields, transforms and frequency projections.

mod field;
pub(crate) mod grid;
pub mod ops;
pub mod snapshot;
mod trace;

pub use field::{Field, Repr};
pub use grid::{required_pad, smooth_fft_len, Grid, DEFAULT_PRODUCT_ORDER};
pub use ops::{
    bernstein_ratio, bessel_potential, derivative, ensure_mean_free, fractional_derivative, lp_low, lp_project,
    riesz_project, LittlewoodPaley, RieszSign,
};
pub use trace::Trace;
