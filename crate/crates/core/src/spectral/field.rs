use std::borrow::Cow;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Grid;
use crate::error::{GkdvError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Repr {
    Physical,
    Spectral,
}

/// One spatial state on a [`Grid`], held either as point samples or as
/// Fourier coefficients.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
    repr: Repr,
    real_valued: bool,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Field {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.modes()],
            repr: Repr::Physical,
            real_valued: true,
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().iter().map(|&x| Complex64::new(f(x), 0.0)).collect();
        Field { grid: grid.clone(), values, repr: Repr::Physical, real_valued: true }
    }

    pub fn from_complex_fn(grid: &Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        Field { grid: grid.clone(), values, repr: Repr::Physical, real_valued: false }
    }

    pub fn from_real(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        check_len(grid, values.len())?;
        let values = values.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        Ok(Field { grid: grid.clone(), values, repr: Repr::Physical, real_valued: true })
    }

    pub fn from_physical(grid: &Grid, values: Vec<Complex64>, real_valued: bool) -> Result<Self> {
        check_len(grid, values.len())?;
        let mut f = Field { grid: grid.clone(), values, repr: Repr::Physical, real_valued };
        f.clean_real();
        Ok(f)
    }

    pub fn from_spectral(grid: &Grid, coeffs: Vec<Complex64>, real_valued: bool) -> Result<Self> {
        check_len(grid, coeffs.len())?;
        Ok(Field { grid: grid.clone(), values: coeffs, repr: Repr::Spectral, real_valued })
    }

    /// Single complex mode `exp(i ξ_k x)`.
    pub fn mode(grid: &Grid, k: i64) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.modes()];
        coeffs[grid.index_of(k)] = Complex64::new(1.0, 0.0);
        Field { grid: grid.clone(), values: coeffs, repr: Repr::Spectral, real_valued: false }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn repr(&self) -> Repr {
        self.repr
    }

    pub fn is_real_valued(&self) -> bool {
        self.real_valued
    }

    /// Raw stored values in the current representation.
    pub fn raw(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_raw(self) -> Vec<Complex64> {
        self.values
    }

    /// Converts to the requested representation.
    pub fn transform(&self, target: Repr) -> Field {
        if self.repr == target {
            return self.clone();
        }
        let values = match target {
            Repr::Spectral => self.grid.forward(&self.values),
            Repr::Physical => self.grid.inverse(&self.values),
        };
        let mut out = Field { grid: self.grid.clone(), values, repr: target, real_valued: self.real_valued };
        out.clean_real();
        out
    }

    pub fn to_spectral(&self) -> Field {
        self.transform(Repr::Spectral)
    }

    pub fn to_physical(&self) -> Field {
        self.transform(Repr::Physical)
    }

    pub fn spectral(&self) -> Cow<'_, [Complex64]> {
        match self.repr {
            Repr::Spectral => Cow::Borrowed(&self.values),
            Repr::Physical => Cow::Owned(self.grid.forward(&self.values)),
        }
    }

    pub fn physical(&self) -> Cow<'_, [Complex64]> {
        match self.repr {
            Repr::Physical => Cow::Borrowed(&self.values),
            Repr::Spectral => {
                let mut v = self.grid.inverse(&self.values);
                if self.real_valued {
                    v.iter_mut().for_each(|c| c.im = 0.0);
                }
                Cow::Owned(v)
            }
        }
    }

    /// Real parts of the physical samples.
    pub fn real_values(&self) -> Vec<f64> {
        self.physical().iter().map(|c| c.re).collect()
    }

    /// Applies a per-mode multiplier `m(idx, ξ)` in spectral space.
    pub fn map_spectral(&self, m: impl Fn(usize, f64) -> Complex64, real_valued: bool) -> Field {
        let xi = self.grid.wavenumbers();
        let coeffs = self
            .spectral()
            .iter()
            .enumerate()
            .map(|(idx, &c)| c * m(idx, xi[idx]))
            .collect();
        Field { grid: self.grid.clone(), values: coeffs, repr: Repr::Spectral, real_valued }
    }

    /// Applies a real multiplier that depends only on `|ξ_k|`.
    pub fn map_spectral_even(&self, m: impl Fn(f64) -> f64) -> Field {
        let axi = self.grid.abs_wavenumbers();
        let coeffs = self.spectral().iter().enumerate().map(|(idx, &c)| c * m(axi[idx])).collect();
        Field { grid: self.grid.clone(), values: coeffs, repr: Repr::Spectral, real_valued: self.real_valued }
    }

    /// Applies a pointwise map in physical space.
    pub fn map_physical(&self, m: impl Fn(f64, Complex64) -> Complex64, real_valued: bool) -> Field {
        let x = self.grid.points();
        let values = self.physical().iter().enumerate().map(|(j, &v)| m(x[j], v)).collect();
        let mut out = Field { grid: self.grid.clone(), values, repr: Repr::Physical, real_valued };
        out.clean_real();
        out
    }

    pub fn scale(&self, c: f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            repr: self.repr,
            real_valued: self.real_valued,
        }
    }

    pub fn scale_complex(&self, c: Complex64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            repr: self.repr,
            real_valued: self.real_valued && c.im == 0.0,
        }
    }

    pub fn conj(&self) -> Field {
        let p = self.physical();
        let values = p.iter().map(|c| c.conj()).collect();
        Field { grid: self.grid.clone(), values, repr: Repr::Physical, real_valued: self.real_valued }
    }

    /// Zero-mode coefficient, i.e. the box average.
    pub fn mean(&self) -> Complex64 {
        self.spectral()[0]
    }

    /// Copy with the zero mode removed.
    pub fn mean_free(&self) -> Field {
        let mut coeffs = self.spectral().into_owned();
        coeffs[0] = Complex64::new(0.0, 0.0);
        Field { grid: self.grid.clone(), values: coeffs, repr: Repr::Spectral, real_valued: self.real_valued }
    }

    /// ∫ f dx over the box (trapezoid rule, exact for the periodic interpolant).
    pub fn integral(&self) -> Complex64 {
        self.mean() * self.grid.box_length()
    }

    /// L² norm via physical-space quadrature.
    pub fn l2_norm(&self) -> f64 {
        let h = self.grid.spacing();
        (self.physical().iter().map(|c| c.norm_sqr()).sum::<f64>() * h).sqrt()
    }

    /// L² norm via Parseval on the coefficients.
    pub fn l2_norm_spectral(&self) -> f64 {
        (self.spectral().iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.box_length()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.physical().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// ∫ f ḡ dx.
    pub fn inner(&self, other: &Field) -> Complex64 {
        let h = self.grid.spacing();
        let a = self.physical();
        let b = other.physical();
        a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum::<Complex64>() * h
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest deviation from conjugate symmetry `c_{-k} = conj(c_k)`,
    /// relative to the largest coefficient.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let c = self.spectral();
        let scale = c.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        (0..c.len())
            .filter(|&idx| !self.grid.is_nyquist(idx))
            .map(|idx| {
                let mirror = self.grid.index_of(-self.grid.mode_number(idx));
                (c[mirror] - c[idx].conj()).norm()
            })
            .fold(0.0, f64::max)
            / scale
    }

    /// Largest pointwise difference in physical space.
    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        let a = self.physical();
        let b = other.physical();
        a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn clean_real(&mut self) {
        if self.real_valued && self.repr == Repr::Physical {
            self.values.iter_mut().for_each(|c| c.im = 0.0);
        }
    }

    fn combine(&self, other: &Field, f: impl Fn(Complex64, Complex64) -> Complex64) -> Field {
        assert!(self.grid == other.grid, "fields live on different grids");
        let real_valued = self.real_valued && other.real_valued;
        if self.repr == Repr::Spectral && other.repr == Repr::Spectral {
            let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
            return Field { grid: self.grid.clone(), values, repr: Repr::Spectral, real_valued };
        }
        let a = self.physical();
        let b = other.physical();
        let values = a.iter().zip(b.iter()).map(|(&x, &y)| f(x, y)).collect();
        Field { grid: self.grid.clone(), values, repr: Repr::Physical, real_valued }
    }

    /// Pointwise product in physical space (no dealiasing).
    pub fn pointwise_mul(&self, other: &Field) -> Field {
        assert!(self.grid == other.grid, "fields live on different grids");
        let a = self.physical();
        let b = other.physical();
        let values = a.iter().zip(b.iter()).map(|(&x, &y)| x * y).collect();
        let mut out = Field {
            grid: self.grid.clone(),
            values,
            repr: Repr::Physical,
            real_valued: self.real_valued && other.real_valued,
        };
        out.clean_real();
        out
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.combine(rhs, |a, b| a + b)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.combine(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.scale(rhs)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scale(-1.0)
    }
}

fn check_len(grid: &Grid, len: usize) -> Result<()> {
    if len != grid.modes() {
        return Err(GkdvError::GridMismatch(format!("{len} values for a {}-point grid", grid.modes())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_lands_in_zero_mode() {
        let g = Grid::new(7.0, 32).unwrap();
        let c = Field::from_fn(&g, |_| 1.0).to_spectral();
        assert!((c.raw()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(c.raw()[1..].iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn cosine_has_two_symmetric_coefficients() {
        let g = Grid::new(7.0, 32).unwrap();
        let c = Field::from_fn(&g, |x| (2.0 * PI * x / 7.0).cos()).to_spectral();
        for (idx, v) in c.raw().iter().enumerate() {
            let k = g.mode_number(idx);
            if k.abs() == 1 {
                assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-15, "k={k}: {v}");
            } else {
                assert!(v.norm() < 1e-15);
            }
        }
    }

    #[test]
    fn single_mode_matches_exponential() {
        let g = Grid::new(5.0, 16).unwrap();
        let f = Field::mode(&g, 3).to_physical();
        let xi = 2.0 * PI * 3.0 / 5.0;
        for (x, v) in g.points().iter().zip(f.raw()) {
            assert!((v - Complex64::new(0.0, xi * x).exp()).norm() < 1e-13);
        }
    }

    #[test]
    fn length_mismatch_is_error() {
        let g = Grid::new(5.0, 16).unwrap();
        assert!(matches!(Field::from_real(&g, vec![0.0; 8]), Err(GkdvError::GridMismatch(_))));
    }
}
