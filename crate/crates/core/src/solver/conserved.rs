use serde::{Deserialize, Serialize};

use crate::spectral::{derivative, Field};

/// `∫ u² dx`, by Parseval.
pub fn mass(u: &Field) -> f64 {
    let n = u.l2_norm_spectral();
    n * n
}

/// `∫ ½u_x² - u^{p+1}/(p+1) dx`.
///
/// The potential term is integrated on the padded grid, which is exact for
/// the trigonometric interpolant whenever the padding is alias-free for
/// products of `p + 1` factors.
pub fn energy(u: &Field, power: u32) -> f64 {
    let ux = derivative(u, 1);
    let kinetic = 0.5 * mass(&ux);
    kinetic - potential_integral(u, power + 1) / (power + 1) as f64
}

/// `∫ u^q dx` for real `u`, evaluated on the padded grid.
pub fn potential_integral(u: &Field, q: u32) -> f64 {
    let grid = u.grid();
    let coeffs = u.spectral();
    let padded = grid.to_padded(&coeffs);
    let sum: f64 = padded.iter().map(|v| v.re.powi(q as i32)).sum();
    sum * grid.box_length() / padded.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservedSample {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
}

impl ConservedSample {
    pub fn measure(t: f64, u: &Field, power: u32) -> Self {
        ConservedSample { t, mass: mass(u), energy: energy(u, power) }
    }
}

/// Largest relative deviations `(mass, energy)` from the first sample.
pub fn relative_drift(history: &[ConservedSample]) -> (f64, f64) {
    let Some(first) = history.first() else {
        return (0.0, 0.0);
    };
    let rel = |a: f64, b: f64| if b == 0.0 { (a - b).abs() } else { ((a - b) / b).abs() };
    history.iter().fold((0.0f64, 0.0f64), |(m, e), s| {
        (m.max(rel(s.mass, first.mass)), e.max(rel(s.energy, first.energy)))
    })
}
