//! The soliton `Q`, solving `Q'' + Q⁴ = Q`, and its rescalings
//! `R = λ^{-2/3} Q((x - x_c)/λ)`.
//!
//! Substituting `A sech^{2/3}(3x/2)` into the ODE forces `A³ = 5/2`, so
//! `Q(x) = ((5/2) sech²(3x/2))^{1/3}`. Multiplying the ODE by `Q'` and by
//! `Q` and integrating gives `∫Q'² = (3/7)∫Q²`, `∫Q⁵ = (10/7)∫Q²` and
//! `E[Q] = -(1/14)∫Q²`.

use serde::{Deserialize, Serialize};

use crate::error::{GkdvError, Result};
use crate::report::Report;
use crate::solver::{energy, mass};
use crate::spectral::{derivative, Field, Grid};

/// `A³` for the amplitude `A` of `Q`.
pub const AMPLITUDE_CUBED: f64 = 2.5;

/// Largest admissible value of the profile at distance `L/2` from its
/// centre.
pub const TAIL_TOLERANCE: f64 = 1e-12;

/// `E[Q] / ∫Q²`.
pub const ENERGY_MASS_RATIO: f64 = -1.0 / 14.0;

pub fn amplitude() -> f64 {
    AMPLITUDE_CUBED.cbrt()
}

/// `sech(z)^{2/3}` without overflow for large `|z|`.
fn sech_two_thirds(z: f64) -> f64 {
    let e = (-z.abs()).exp();
    (2.0 * e / (1.0 + e * e)).powf(2.0 / 3.0)
}

/// `Q(y)`.
pub fn q(y: f64) -> f64 {
    amplitude() * sech_two_thirds(1.5 * y)
}

/// `Q'(y) = -Q(y) tanh(3y/2)`.
pub fn q_prime(y: f64) -> f64 {
    -q(y) * (1.5 * y).tanh()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub lambda: f64,
    pub center: f64,
    #[serde(default = "amplitude")]
    pub amplitude: f64,
}

impl Default for SolitonParams {
    fn default() -> Self {
        SolitonParams { lambda: 1.0, center: 0.0, amplitude: amplitude() }
    }
}

impl SolitonParams {
    pub fn new(lambda: f64, center: f64) -> Self {
        SolitonParams { lambda, center, amplitude: amplitude() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite() && self.center.is_finite()) {
            return Err(GkdvError::InvalidArgument(format!(
                "soliton scale {} / centre {} invalid",
                self.lambda, self.center
            )));
        }
        if (self.amplitude.powi(3) - AMPLITUDE_CUBED).abs() > 1e-12 {
            return Err(GkdvError::InvalidArgument(format!(
                "soliton amplitude {} does not satisfy A³ = 5/2",
                self.amplitude
            )));
        }
        Ok(())
    }

    /// `R` at `x`, using the periodic displacement from the centre.
    pub fn eval(&self, grid: &Grid, x: f64) -> f64 {
        let y = grid.wrap_displacement(x, self.center) / self.lambda;
        self.lambda.powf(-2.0 / 3.0) * q(y)
    }

    /// `(∂R/∂λ, ∂R/∂x_c)` at `x`.
    pub fn gradients(&self, grid: &Grid, x: f64) -> (f64, f64) {
        let l = self.lambda;
        let y = grid.wrap_displacement(x, self.center) / l;
        let s = l.powf(-5.0 / 3.0);
        let (qy, qpy) = (q(y), q_prime(y));
        (-s * (2.0 / 3.0 * qy + y * qpy), -s * qpy)
    }

    /// Value of `R` at distance `L/2` from its centre.
    pub fn tail(&self, grid: &Grid) -> f64 {
        self.lambda.powf(-2.0 / 3.0) * q(0.5 * grid.box_length() / self.lambda)
    }
}

fn check_tail(grid: &Grid, p: &SolitonParams) -> Result<()> {
    let tail = p.tail(grid);
    if tail >= TAIL_TOLERANCE {
        return Err(GkdvError::BoxTooSmall { tail, limit: TAIL_TOLERANCE });
    }
    Ok(())
}

/// `Q` sampled on the grid.
pub fn q_profile(grid: &Grid) -> Result<Field> {
    scaled_soliton(grid, &SolitonParams::default())
}

/// `R(x) = λ^{-2/3} Q((x - x_c)/λ)` sampled on the grid, periodically wrapped.
pub fn scaled_soliton(grid: &Grid, p: &SolitonParams) -> Result<Field> {
    p.validate()?;
    check_tail(grid, p)?;
    Ok(soliton_field(grid, p))
}

/// [`scaled_soliton`] without the tail check.
pub fn soliton_field(grid: &Grid, p: &SolitonParams) -> Field {
    Field::from_fn(grid, |x| p.eval(grid, x))
}

/// Quadrature checks of the ODE and its integral identities.
pub fn soliton_identities(grid: &Grid) -> Result<Report> {
    let qf = q_profile(grid)?;
    let qx = derivative(&qf, 1).to_physical();
    let qxx = derivative(&qf, 2).to_physical();
    let qv = qf.real_values();
    let qxv = qx.real_values();
    let qxxv = qxx.real_values();
    let h = grid.spacing();
    let m = mass(&qf);
    let dm = mass(&qx);
    let q5: f64 = qv.iter().map(|v| v.powi(5)).sum::<f64>() * h;
    let e = energy(&qf, 4);
    let ode = (0..qv.len()).map(|j| (qxxv[j] + qv[j].powi(4) - qv[j]).abs()).fold(0.0, f64::max);
    let first = (0..qv.len())
        .map(|j| (0.5 * qxv[j] * qxv[j] + 0.2 * qv[j].powi(5) - 0.5 * qv[j] * qv[j]).abs())
        .fold(0.0, f64::max);
    let mut r = Report::new("soliton_identities");
    r.push("mass", m)
        .push_note("derivative_mass_ratio", dm / m, "expected 3/7")
        .push_note("quintic_mass_ratio", q5 / m, "expected 10/7")
        .push("energy", e)
        .push_note("energy_mass_ratio", e / m, "expected -1/14")
        .push_note("energy_ratio_alt_constant", 0.1, "alternative constant, not supported by the identities")
        .push("ode_residual_max", ode)
        .push("first_integral_residual_max", first);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_match_finite_differences() {
        let g = Grid::new(60.0, 256).unwrap();
        let p = SolitonParams::new(1.2, 0.7);
        let h = 1e-6;
        for &x in &[-3.0, -0.4, 0.0, 1.1, 5.0] {
            let (dl, dc) = p.gradients(&g, x);
            let fd_l = (SolitonParams::new(1.2 + h, 0.7).eval(&g, x) - SolitonParams::new(1.2 - h, 0.7).eval(&g, x)) / (2.0 * h);
            let fd_c = (SolitonParams::new(1.2, 0.7 + h).eval(&g, x) - SolitonParams::new(1.2, 0.7 - h).eval(&g, x)) / (2.0 * h);
            assert!((dl - fd_l).abs() < 1e-8 && (dc - fd_c).abs() < 1e-8);
        }
    }

    #[test]
    fn tail_check() {
        assert!(matches!(q_profile(&Grid::new(20.0, 256).unwrap()), Err(GkdvError::BoxTooSmall { .. })));
        assert!(q_profile(&Grid::new(60.0, 256).unwrap()).is_ok());
    }

    #[test]
    fn amplitude_validated() {
        let p = SolitonParams { amplitude: 2f64.cbrt(), ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn sech_is_stable_far_out() {
        assert!(q(800.0) >= 0.0 && q(800.0).is_finite());
        assert!((q(0.0) - 2.5f64.cbrt()).abs() < 1e-15);
    }
}
