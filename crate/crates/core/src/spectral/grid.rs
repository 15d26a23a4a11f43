use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{GkdvError, Result};

/// Power of the nonlinearity the default padding is sized for.
pub const DEFAULT_PRODUCT_ORDER: usize = 4;

/// Periodic grid on `[-L/2, L/2)` with `M` equispaced points.
///
/// Spectral coefficients use the Fourier-series normalisation
///
/// ```text
/// c_k = (1/M) Σ_j f(x_j) exp(-i ξ_k x_j),      f(x_j) = Σ_k c_k exp(i ξ_k x_j)
/// ```
///
/// with `ξ_k = 2πk/L`. This is the discrete counterpart of the continuum
/// pair `f̂(ξ) = (2π)⁻¹ ∫ e^{-ixξ} f dx`, `f = ∫ e^{ixξ} f̂ dξ`, with
/// `c_k ≈ f̂(ξ_k) Δξ` and `Δξ = 2π/L`. Every norm in the crate is defined
/// against this scaling, so `∫|f|² dx = L Σ |c_k|²`.
///
/// Coefficients are stored in FFT order (`k = 0, 1, …, M/2-1, -M/2, …, -1`).
/// The Nyquist entry carries wavenumber 0 so that the wavenumber array is
/// odd-symmetric (odd-order derivatives annihilate it); even multipliers see
/// its true magnitude through [`Grid::abs_wavenumbers`]. The nonlinear
/// stepper never retains it.
///
/// Quartic (more generally order-`p`) products are dealiased by zero
/// padding: modes `|k| ≤ K` are kept and products are formed on a padded
/// grid of size `P ≥ (p+1)K + 1`, rounded up to a 5-smooth FFT length.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridData>,
}

struct GridData {
    box_length: f64,
    modes: usize,
    dealias_keep: usize,
    product_order: usize,
    pad_size: usize,
    points: Vec<f64>,
    wavenumbers: Vec<f64>,
    abs_wavenumbers: Vec<f64>,
    signs: Vec<f64>,
    /// `(coefficient index, padded index, (-1)^k)` for each retained mode.
    pad_map: Vec<(usize, usize, f64)>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    pad_fwd: Arc<dyn Fft<f64>>,
    pad_inv: Arc<dyn Fft<f64>>,
}

impl Grid {
    /// Grid keeping every mode except Nyquist, padded for quartic products.
    pub fn new(box_length: f64, modes: usize) -> Result<Self> {
        if modes < 4 {
            return Err(GkdvError::ConfigInvalid(format!("mode count {modes} must be at least 4")));
        }
        Self::with_dealiasing(box_length, modes, modes / 2 - 1, DEFAULT_PRODUCT_ORDER)
    }

    pub fn with_dealiasing(
        box_length: f64,
        modes: usize,
        dealias_keep: usize,
        product_order: usize,
    ) -> Result<Self> {
        let pad = required_pad(dealias_keep, product_order).max(modes);
        Self::build(box_length, modes, dealias_keep, product_order, smooth_fft_len(pad))
    }

    /// Same grid with an explicit padded size. Sizes below the aliasing
    /// bound are accepted on purpose: they let tests inject aliasing.
    pub fn with_pad_size(&self, pad_size: usize) -> Result<Self> {
        if pad_size < self.modes() {
            return Err(GkdvError::ConfigInvalid(format!(
                "pad size {pad_size} smaller than mode count {}",
                self.modes()
            )));
        }
        Self::build(self.box_length(), self.modes(), self.dealias_keep(), self.product_order(), pad_size)
    }

    /// Same box and mode count, padding sized for products of `order` factors.
    pub fn with_product_order(&self, order: usize) -> Result<Self> {
        Self::with_dealiasing(self.box_length(), self.modes(), self.dealias_keep(), order)
    }

    /// Box scaled by `factor` with identical mode count and dealiasing.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::build(
            self.box_length() * factor,
            self.modes(),
            self.dealias_keep(),
            self.product_order(),
            self.pad_size(),
        )
    }

    fn build(
        box_length: f64,
        modes: usize,
        dealias_keep: usize,
        product_order: usize,
        pad_size: usize,
    ) -> Result<Self> {
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(GkdvError::ConfigInvalid(format!("box length {box_length} must be positive")));
        }
        if modes < 4 || modes % 2 != 0 {
            return Err(GkdvError::ConfigInvalid(format!("mode count {modes} must be even and at least 4")));
        }
        if dealias_keep == 0 || dealias_keep >= modes / 2 {
            return Err(GkdvError::ConfigInvalid(format!(
                "dealias cutoff {dealias_keep} must lie in 1..{}",
                modes / 2
            )));
        }
        if product_order == 0 {
            return Err(GkdvError::ConfigInvalid("product order must be positive".into()));
        }
        let h = box_length / modes as f64;
        let points = (0..modes).map(|j| -0.5 * box_length + j as f64 * h).collect();
        let wavenumbers = (0..modes)
            .map(|idx| {
                if idx == modes / 2 {
                    0.0
                } else {
                    2.0 * PI * mode_number(idx, modes) as f64 / box_length
                }
            })
            .collect();
        let abs_wavenumbers = (0..modes)
            .map(|idx| 2.0 * PI * mode_number(idx, modes).unsigned_abs() as f64 / box_length)
            .collect();
        let signs = (0..modes)
            .map(|idx| if mode_number(idx, modes).rem_euclid(2) == 0 { 1.0 } else { -1.0 })
            .collect();
        let pad_map = (0..modes)
            .filter_map(|idx| {
                let k = mode_number(idx, modes);
                (k.unsigned_abs() as usize <= dealias_keep && idx != modes / 2).then(|| {
                    let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    (idx, k.rem_euclid(pad_size as i64) as usize, sign)
                })
            })
            .collect();
        let mut planner = FftPlanner::new();
        let data = GridData {
            pad_map,
            box_length,
            modes,
            dealias_keep,
            product_order,
            pad_size,
            points,
            wavenumbers,
            abs_wavenumbers,
            signs,
            fwd: planner.plan_fft_forward(modes),
            inv: planner.plan_fft_inverse(modes),
            pad_fwd: planner.plan_fft_forward(pad_size),
            pad_inv: planner.plan_fft_inverse(pad_size),
        };
        Ok(Grid { inner: Arc::new(data) })
    }

    pub fn box_length(&self) -> f64 {
        self.inner.box_length
    }

    pub fn modes(&self) -> usize {
        self.inner.modes
    }

    pub fn dealias_keep(&self) -> usize {
        self.inner.dealias_keep
    }

    pub fn product_order(&self) -> usize {
        self.inner.product_order
    }

    pub fn pad_size(&self) -> usize {
        self.inner.pad_size
    }

    /// True when the padded grid is large enough for exact dealiasing.
    pub fn is_alias_free(&self) -> bool {
        self.pad_size() >= required_pad(self.dealias_keep(), self.product_order())
    }

    pub fn spacing(&self) -> f64 {
        self.inner.box_length / self.inner.modes as f64
    }

    pub fn points(&self) -> &[f64] {
        &self.inner.points
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// `|ξ_k|`, with the true magnitude `πM/L` at the Nyquist entry. Even
    /// multipliers (`|ξ|^s`, `⟨ξ⟩^s`, even-order derivatives) use these.
    pub fn abs_wavenumbers(&self) -> &[f64] {
        &self.inner.abs_wavenumbers
    }

    /// Largest resolved |ξ| (one mode below Nyquist).
    pub fn max_wavenumber(&self) -> f64 {
        2.0 * PI * (self.modes() / 2 - 1) as f64 / self.box_length()
    }

    /// Integer mode number for storage index `idx`.
    pub fn mode_number(&self, idx: usize) -> i64 {
        mode_number(idx, self.modes())
    }

    pub fn index_of(&self, k: i64) -> usize {
        k.rem_euclid(self.modes() as i64) as usize
    }

    pub fn is_nyquist(&self, idx: usize) -> bool {
        idx == self.modes() / 2
    }

    /// Whether storage index `idx` survives dealiasing.
    pub fn is_retained(&self, idx: usize) -> bool {
        self.mode_number(idx).unsigned_abs() as usize <= self.dealias_keep() && !self.is_nyquist(idx)
    }

    /// Periodic displacement `x - center` folded into `[-L/2, L/2)`.
    pub fn wrap_displacement(&self, x: f64, center: f64) -> f64 {
        let l = self.box_length();
        (x - center + 0.5 * l).rem_euclid(l) - 0.5 * l
    }

    pub fn forward(&self, physical: &[Complex64]) -> Vec<Complex64> {
        let mut buf = physical.to_vec();
        self.forward_in_place(&mut buf);
        buf
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.modes(), "buffer length does not match grid");
        run_fft(&*self.inner.fwd, buf);
        let inv_m = 1.0 / self.modes() as f64;
        for (c, s) in buf.iter_mut().zip(&self.inner.signs) {
            *c *= s * inv_m;
        }
    }

    pub fn inverse(&self, spectral: &[Complex64]) -> Vec<Complex64> {
        let mut buf = spectral.to_vec();
        self.inverse_in_place(&mut buf);
        buf
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.modes(), "buffer length does not match grid");
        for (c, s) in buf.iter_mut().zip(&self.inner.signs) {
            *c *= *s;
        }
        run_fft(&*self.inner.inv, buf);
    }

    /// Samples of the trigonometric polynomial with coefficients `spectral`
    /// (retained modes only) on the padded grid.
    pub fn to_padded(&self, spectral: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.pad_size()];
        for &(idx, pidx, sign) in &self.inner.pad_map {
            buf[pidx] = spectral[idx] * sign;
        }
        run_fft(&*self.inner.pad_inv, &mut buf);
        buf
    }

    /// Coefficients of padded-grid samples, truncated to the retained modes.
    pub fn from_padded(&self, mut padded: Vec<Complex64>) -> Vec<Complex64> {
        let p = self.pad_size();
        assert_eq!(padded.len(), p, "padded buffer length does not match grid");
        run_fft(&*self.inner.pad_fwd, &mut padded);
        let inv_p = 1.0 / p as f64;
        let mut out = vec![Complex64::new(0.0, 0.0); self.modes()];
        for &(idx, pidx, sign) in &self.inner.pad_map {
            out[idx] = padded[pidx] * (sign * inv_p);
        }
        out
    }

    /// Padded samples of two real fields packed as `a + ib` in one transform.
    pub fn to_padded_pair(&self, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.pad_size()];
        for &(idx, pidx, sign) in &self.inner.pad_map {
            buf[pidx] = (a[idx] + i * b[idx]) * sign;
        }
        run_fft(&*self.inner.pad_inv, &mut buf);
        buf
    }

    /// Splits padded samples `f + ig` of two real fields into the retained
    /// coefficients of `f` and `g`.
    pub fn from_padded_pair(&self, mut padded: Vec<Complex64>) -> (Vec<Complex64>, Vec<Complex64>) {
        let p = self.pad_size();
        assert_eq!(padded.len(), p, "padded buffer length does not match grid");
        run_fft(&*self.inner.pad_fwd, &mut padded);
        let half = 0.5 / p as f64;
        let zero = Complex64::new(0.0, 0.0);
        let mut f = vec![zero; self.modes()];
        let mut g = vec![zero; self.modes()];
        for &(idx, pidx, sign) in &self.inner.pad_map {
            let s = padded[pidx];
            let m = padded[(p - pidx) % p].conj();
            f[idx] = (s + m) * (sign * half);
            g[idx] = Complex64::new(0.0, -1.0) * (s - m) * (sign * half);
        }
        (f, g)
    }

    /// Dealiased `f^power` for the coefficient array `spectral`.
    pub fn dealiased_power(&self, spectral: &[Complex64], power: u32, real_valued: bool) -> Vec<Complex64> {
        let mut padded = self.to_padded(spectral);
        for v in padded.iter_mut() {
            if real_valued {
                *v = Complex64::new(ipow(v.re, power), 0.0);
            } else {
                *v = v.powu(power);
            }
        }
        self.from_padded(padded)
    }

    /// Dealiased pointwise product of several coefficient arrays.
    pub fn dealiased_product(&self, factors: &[&[Complex64]]) -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(1.0, 0.0); self.pad_size()];
        for f in factors {
            let vals = self.to_padded(f);
            for (a, v) in acc.iter_mut().zip(vals) {
                *a *= v;
            }
        }
        self.from_padded(acc)
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.box_length() == other.box_length()
                && self.modes() == other.modes()
                && self.dealias_keep() == other.dealias_keep()
                && self.pad_size() == other.pad_size())
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("box_length", &self.box_length())
            .field("modes", &self.modes())
            .field("dealias_keep", &self.dealias_keep())
            .field("pad_size", &self.pad_size())
            .finish()
    }
}

thread_local! {
    static SCRATCH: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
}

/// In-place transform with a reused per-thread scratch buffer.
fn run_fft(fft: &dyn Fft<f64>, buf: &mut [Complex64]) {
    SCRATCH.with(|cell| {
        let mut scratch = cell.borrow_mut();
        let need = fft.get_inplace_scratch_len();
        if scratch.len() < need {
            scratch.resize(need, Complex64::new(0.0, 0.0));
        }
        fft.process_with_scratch(buf, &mut scratch[..need]);
    });
}

/// `x^p` by repeated squaring.
#[inline]
pub(crate) fn ipow(x: f64, p: u32) -> f64 {
    match p {
        0 => 1.0,
        1 => x,
        2 => x * x,
        3 => x * x * x,
        4 => {
            let x2 = x * x;
            x2 * x2
        }
        5 => {
            let x2 = x * x;
            x2 * x2 * x
        }
        _ => {
            let (mut acc, mut base, mut e) = (1.0, x, p);
            while e > 0 {
                if e & 1 == 1 {
                    acc *= base;
                }
                base *= base;
                e >>= 1;
            }
            acc
        }
    }
}

fn mode_number(idx: usize, modes: usize) -> i64 {
    if idx < modes / 2 {
        idx as i64
    } else {
        idx as i64 - modes as i64
    }
}

/// Smallest padded size that keeps modes `|k| ≤ keep` exact under products
/// of `order` factors.
pub fn required_pad(keep: usize, order: usize) -> usize {
    (order + 1) * keep + 1
}

/// Smallest even integer ≥ `n` whose only prime factors are 2, 3 and 5.
pub fn smooth_fft_len(n: usize) -> usize {
    let mut m = n.max(2);
    loop {
        if m % 2 == 0 {
            let mut r = m;
            for p in [2, 3, 5] {
                while r % p == 0 {
                    r /= p;
                }
            }
            if r == 1 {
                return m;
            }
        }
        m += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumbers_are_odd_symmetric() {
        let g = Grid::new(10.0, 16).unwrap();
        for idx in 0..16 {
            let mirror = g.index_of(-g.mode_number(idx));
            if g.is_nyquist(idx) {
                assert_eq!(g.wavenumbers()[idx], 0.0);
            } else {
                assert_eq!(g.wavenumbers()[idx], -g.wavenumbers()[mirror]);
            }
        }
    }

    #[test]
    fn odd_mode_count_rejected() {
        assert!(matches!(Grid::with_dealiasing(1.0, 15, 3, 4), Err(GkdvError::ConfigInvalid(_))));
        assert!(matches!(Grid::with_dealiasing(1.0, 16, 8, 4), Err(GkdvError::ConfigInvalid(_))));
        assert!(matches!(Grid::new(-1.0, 16), Err(GkdvError::ConfigInvalid(_))));
    }

    #[test]
    fn quartic_padding_bound() {
        let g = Grid::new(100.0, 1024).unwrap();
        assert!(g.pad_size() >= 5 * 511 + 1);
        assert_eq!(g.pad_size(), 2560);
        assert!(g.is_alias_free());
        let aliased = g.with_pad_size(1024).unwrap();
        assert!(!aliased.is_alias_free());
    }

    #[test]
    fn smooth_lengths() {
        assert_eq!(smooth_fft_len(2556), 2560);
        assert_eq!(smooth_fft_len(7), 8);
        assert_eq!(smooth_fft_len(31), 32);
    }

    #[test]
    fn wrap_displacement_folds() {
        let g = Grid::new(10.0, 16).unwrap();
        assert!((g.wrap_displacement(4.0, -4.0) - (-2.0)).abs() < 1e-14);
        assert!((g.wrap_displacement(1.0, 0.5) - 0.5).abs() < 1e-14);
    }
}
