//! Fourier multipliers: derivatives, `|∇|^s`, Littlewood–Paley pieces and
//! Riesz projections.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Field, Repr};
use crate::error::{GkdvError, Result};

/// Relative tolerance on the mean for negative-order operators.
pub const MEAN_TOLERANCE: f64 = 1e-12;

/// Multiplies coefficient `k` by `(iξ_k)^order`.
pub fn derivative(f: &Field, order: u32) -> Field {
    if order == 0 {
        return f.clone();
    }
    if order % 2 == 0 {
        let sign = if order % 4 == 0 { 1.0 } else { -1.0 };
        return f.map_spectral_even(|a| sign * a.powi(order as i32));
    }
    let i = Complex64::new(0.0, 1.0);
    f.map_spectral(|_, xi| (i * xi).powu(order), f.is_real_valued())
}

/// Checks that `f` is mean-free to [`MEAN_TOLERANCE`] relative to its L² size.
pub fn ensure_mean_free(f: &Field) -> Result<()> {
    let coeffs = f.spectral();
    let mean = coeffs[0].norm();
    let norm = (coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt();
    if mean > MEAN_TOLERANCE * norm {
        return Err(GkdvError::NegativeOrderOnNonzeroMean { mean, norm });
    }
    Ok(())
}

/// `|∇|^s f`. The zero mode is always mapped to zero; for `s < 0` the
/// input must be mean-free.
pub fn fractional_derivative(f: &Field, s: f64) -> Result<Field> {
    if s < 0.0 {
        ensure_mean_free(f)?;
    }
    Ok(f.map_spectral_even(|a| if a == 0.0 { 0.0 } else { a.powf(s) }))
}

/// `⟨∇⟩^s f` with `⟨ξ⟩ = (1 + ξ²)^{1/2}`.
pub fn bessel_potential(f: &Field, s: f64) -> Field {
    f.map_spectral_even(|a| (1.0 + a * a).powf(0.5 * s))
}

/// Littlewood–Paley scheme with ratio `base` between consecutive levels.
///
/// The cutoff is `φ(ξ) = 1 - S((|ξ| - 1)/(base - 1))` with the quintic
/// smoothstep `S(z) = 6z⁵ - 15z⁴ + 10z³` clamped to `[0, 1]`, so `φ = 1`
/// on `|ξ| ≤ 1`, `φ = 0` on `|ξ| ≥ base`, and `φ` is even and C².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LittlewoodPaley {
    pub base: f64,
}

impl Default for LittlewoodPaley {
    fn default() -> Self {
        LittlewoodPaley { base: 2.0 }
    }
}

impl LittlewoodPaley {
    pub fn new(base: f64) -> Result<Self> {
        if !(base > 1.0 && base.is_finite()) {
            return Err(GkdvError::InvalidArgument(format!("Littlewood-Paley base {base} must exceed 1")));
        }
        Ok(LittlewoodPaley { base })
    }

    pub fn cutoff(&self, xi: f64) -> f64 {
        let z = ((xi.abs() - 1.0) / (self.base - 1.0)).clamp(0.0, 1.0);
        1.0 - z * z * z * (z * (6.0 * z - 15.0) + 10.0)
    }

    /// Frequency of level `j`, i.e. `base^j`.
    pub fn level(&self, j: i32) -> f64 {
        self.base.powi(j)
    }

    /// Symbol of `P_{≤N}` at `ξ`.
    pub fn low_symbol(&self, n: f64, xi: f64) -> f64 {
        self.cutoff(xi / n)
    }

    /// Symbol of `P_N = P_{≤N} - P_{≤N/base}` at `ξ`.
    pub fn band_symbol(&self, n: f64, xi: f64) -> f64 {
        self.cutoff(xi / n) - self.cutoff(xi * self.base / n)
    }

    /// Level range `j_min..=j_max` such that `P_{≤N_min}` plus the bands
    /// `P_N`, `N_min < N ≤ N_max`, resolve every mode of a grid with the
    /// given smallest nonzero and largest wavenumbers.
    pub fn level_range(&self, min_xi: f64, max_xi: f64) -> (i32, i32) {
        let lo = (min_xi / self.base).ln() / self.base.ln();
        let hi = (max_xi * 1.0001).ln() / self.base.ln();
        (lo.floor() as i32, hi.ceil() as i32 + 1)
    }
}

/// `P_{≤N} f`.
pub fn lp_low(f: &Field, n: f64, lp: &LittlewoodPaley) -> Field {
    f.map_spectral_even(|a| lp.low_symbol(n, a))
}

/// `P_N f` for the level `N = base^j`.
pub fn lp_project(f: &Field, j: i32, lp: &LittlewoodPaley) -> Field {
    let n = lp.level(j);
    f.map_spectral_even(|a| lp.band_symbol(n, a))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RieszSign {
    /// `ξ ≥ 0`, including the zero mode.
    Plus,
    /// `ξ < 0`.
    Minus,
}

/// Riesz projection onto non-negative (`Plus`) or negative (`Minus`)
/// frequencies. The zero mode (and the Nyquist entry, whose wavenumber is
/// zero) belongs to `Plus`.
pub fn riesz_project(f: &Field, sign: RieszSign) -> Field {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    f.map_spectral(
        |_, xi| match sign {
            RieszSign::Plus if xi >= 0.0 => one,
            RieszSign::Minus if xi < 0.0 => one,
            _ => zero,
        },
        false,
    )
}

/// Ratio `‖P_N f‖_∞ / (N^{1/2} ‖P_N f‖_2)`; `None` when the piece vanishes.
pub fn bernstein_ratio(f: &Field, j: i32, lp: &LittlewoodPaley) -> Option<f64> {
    let piece = lp_project(f, j, lp).transform(Repr::Physical);
    let l2 = piece.l2_norm();
    if l2 == 0.0 {
        return None;
    }
    Some(piece.sup_norm() / (lp.level(j).sqrt() * l2))
}
