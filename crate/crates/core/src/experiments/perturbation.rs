use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{GkdvError, Result};
use crate::modulation::h1_norm;
use crate::spectral::{Field, Grid};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationFamily {
    /// Band-limited Gaussian noise times `e^{-(x-c)²/width²}`.
    #[default]
    BandNoise,
}

/// Random zero-mean perturbation with `‖·‖_{H¹} = epsilon`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationSpec {
    pub family: PerturbationFamily,
    pub epsilon: f64,
    /// Largest |ξ| of the noise before the envelope is applied.
    pub band: f64,
    /// Envelope `e^{-(x-c)²/width²}`.
    pub envelope_width: f64,
    pub center: f64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        PerturbationSpec { family: PerturbationFamily::BandNoise, epsilon: 0.01, band: 0.5, envelope_width: 5.0, center: 0.0 }
    }
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.band > 0.0 && self.envelope_width > 0.0 && self.center.is_finite()) {
            return Err(GkdvError::ConfigInvalid(format!("invalid perturbation {self:?}")));
        }
        Ok(())
    }
}

/// Draws the perturbation. The envelope times noise has its mean removed
/// by subtracting a multiple of the envelope, then is normalised in `H¹`.
pub fn perturbation(grid: &Grid, spec: &PerturbationSpec, seed: u64) -> Result<Field> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = grid.modes();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); m];
    for k in 1..m / 2 {
        let xi = grid.abs_wavenumbers()[k];
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        if xi <= spec.band {
            coeffs[k] = Complex64::new(re, im);
            coeffs[m - k] = coeffs[k].conj();
        }
    }
    let noise = Field::from_spectral(grid, coeffs, true)?.to_physical();
    let width2 = spec.envelope_width * spec.envelope_width;
    let envelope = Field::from_fn(grid, |x| {
        let d = grid.wrap_displacement(x, spec.center);
        (-d * d / width2).exp()
    });
    let raw = noise.pointwise_mul(&envelope);
    let shift = raw.integral().re / envelope.integral().re;
    let zero_mean = &raw - &envelope.scale(shift);
    let norm = h1_norm(&zero_mean);
    if !(norm > 0.0) {
        return Err(GkdvError::ConfigInvalid("perturbation band contains no modes".into()));
    }
    Ok(zero_mean.scale(spec.epsilon / norm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalised_zero_mean_and_seeded() {
        let g = Grid::new(200.0, 1024).unwrap();
        let spec = PerturbationSpec::default();
        let a = perturbation(&g, &spec, 7).unwrap();
        let b = perturbation(&g, &spec, 7).unwrap();
        let c = perturbation(&g, &spec, 8).unwrap();
        assert_eq!(a.max_abs_diff(&b), 0.0);
        assert!(a.max_abs_diff(&c) > 0.0);
        assert!((h1_norm(&a) - 0.01).abs() < 1e-14);
        assert!(a.integral().norm() < 1e-15);
    }
}
