use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::uniform_window;
use crate::error::{GkdvError, Result};
use crate::spectral::Trace;

pub const MIN_XSB_FRAMES: usize = 64;

/// Fraction of the window taken by each smooth ramp of [`taper`].
pub const TAPER_RAMP: f64 = 0.25;

/// `C^∞` plateau window on `z ∈ [0, 1]`: zero at both ends, one on
/// `[TAPER_RAMP, 1 - TAPER_RAMP]`, with ramps `S(y) = f(y)/(f(y) + f(1-y))`,
/// `f(y) = e^{-1/y}`.
pub fn taper(z: f64) -> f64 {
    fn f(y: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else {
            (-1.0 / y).exp()
        }
    }
    let step = |y: f64| {
        let y = y.clamp(0.0, 1.0);
        f(y) / (f(y) + f(1.0 - y))
    };
    if !(0.0..=1.0).contains(&z) {
        return 0.0;
    }
    step(z / TAPER_RAMP).min(step((1.0 - z) / TAPER_RAMP))
}

/// Dyadic modulation profile of a windowed trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellProfile {
    /// Shell indices `k`, consecutive, for `2^k ≤ |τ - ξ³| < 2^{k+1}`.
    pub k: Vec<i32>,
    /// `‖ũ‖²_{L²(A_k)}` of the tapered trace.
    pub mass: Vec<f64>,
    /// Spacing `2π/(NΔt)` of the FFT-native modulation grid.
    pub resolution: f64,
    /// The first shell also holds every `|τ - ξ³|` below this bound.
    pub merged_below: f64,
    pub window: (f64, f64),
    /// `∫(1 - φ²)‖u‖²` by the frame sum: what the taper removes from the
    /// spacetime `L²` mass.
    pub taper_deficit: f64,
}

impl ShellProfile {
    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// `(Σ_k (2^{bk} ‖ũ‖_{L²(A_k)})^q)^{1/q}`, or the max for `q = ∞`.
    pub fn norm(&self, b: f64, q: f64) -> f64 {
        let terms = self.k.iter().zip(&self.mass).map(|(&k, &m)| 2f64.powf(b * k as f64) * m.sqrt());
        if q.is_infinite() {
            terms.fold(0.0, f64::max)
        } else {
            terms.map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
        }
    }
}

/// Shell masses of the tapered trace over `window`.
///
/// Each spatial coefficient is demodulated by the free phase `e^{-itξ³}`,
/// multiplied by [`taper`] and transformed in time, so a frequency `σ` of
/// the result is the modulation `τ - ξ³` of the original.
pub fn xsb_shells(tr: &Trace, window: (f64, f64)) -> Result<ShellProfile> {
    let sub = uniform_window(tr, window)?;
    let n = sub.len();
    if n < MIN_XSB_FRAMES {
        return Err(GkdvError::WindowTooShort { frames: n, required: MIN_XSB_FRAMES });
    }
    let dt = sub.uniform_dt().expect("uniform by construction");
    let times = sub.times();
    let (t0, t1) = (times[0], times[n - 1]);
    let grid = sub.grid().expect("non-empty").clone();
    let xi = grid.wavenumbers();
    let m = grid.modes();
    let phi: Vec<f64> = times.iter().map(|&t| taper((t - t0) / (t1 - t0))).collect();
    let coeffs: Vec<_> = sub.fields().iter().map(|f| f.spectral().into_owned()).collect();

    let resolution = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    let k0 = resolution.log2().ceil() as i32;
    let merged_below = 2f64.powi(k0 + 1);
    let sigma_max = std::f64::consts::PI / dt;
    let k_max = (sigma_max.log2().floor() as i32).max(k0);
    let mut mass = vec![0.0; (k_max - k0 + 1) as usize];
    let fft = FftPlanner::new().plan_fft_forward(n);
    let scale = grid.box_length() * dt / n as f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..m {
        let w3 = xi[k] * xi[k] * xi[k];
        for j in 0..n {
            buf[j] = coeffs[j][k] * Complex64::from_polar(phi[j], -(times[j] - t0) * w3);
        }
        fft.process(&mut buf);
        for (j, c) in buf.iter().enumerate() {
            let mj = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            let s = (mj * resolution).abs();
            let shell = if s < merged_below { k0 } else { (s.log2().floor() as i32).min(k_max) };
            mass[(shell - k0) as usize] += scale * c.norm_sqr();
        }
    }
    let sq: Vec<f64> = sub.fields().iter().map(|f| f.l2_norm_spectral().powi(2)).collect();
    let taper_deficit = dt * phi.iter().zip(&sq).map(|(p, q)| (1.0 - p * p) * q).sum::<f64>();
    Ok(ShellProfile {
        k: (k0..=k_max).collect(),
        mass,
        resolution,
        merged_below,
        window: (t0, t1),
        taper_deficit,
    })
}

/// Finite-window `X^{0,b,q}` surrogate: the dyadic `ℓ^q` sum of
/// `2^{bk}`-weighted shell norms from [`xsb_shells`].
pub fn xsb_norm(tr: &Trace, b: f64, q_dyadic: f64, window: (f64, f64)) -> Result<f64> {
    Ok(xsb_shells(tr, window)?.norm(b, q_dyadic))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::airy_propagate;
    use crate::spectral::{Field, Grid};
    use std::f64::consts::PI;

    fn times(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn taper_shape() {
        assert_eq!(taper(0.0), 0.0);
        assert_eq!(taper(1.0), 0.0);
        assert_eq!(taper(0.5), 1.0);
        assert_eq!(taper(TAPER_RAMP), 1.0);
        assert!((taper(0.1) - taper(0.9)).abs() < 1e-15);
        assert!(taper(0.05) < taper(0.1));
    }

    #[test]
    fn short_window_is_rejected() {
        let g = Grid::new(10.0, 16).unwrap();
        let tr = Trace::sample(times(63, 0.1), |_| Field::zeros(&g)).unwrap();
        assert!(matches!(xsb_norm(&tr, 0.5, 2.0, (0.0, 10.0)), Err(GkdvError::WindowTooShort { frames: 63, .. })));
    }

    #[test]
    fn plane_wave_lands_in_one_shell() {
        let g = Grid::new(2.0 * PI, 32).unwrap();
        let xi1 = 2.0;
        // modulation τ - ξ³ = 24: mid-shell of [16, 32)
        let tau = xi1 * xi1 * xi1 + 24.0;
        let tr = Trace::sample(times(512, 0.01), |t| {
            Field::mode(&g, 2).scale_complex(Complex64::from_polar(1.0, tau * t))
        })
        .unwrap();
        let p = xsb_shells(&tr, (0.0, 5.11)).unwrap();
        let i = p.k.iter().position(|&k| k == 4).unwrap();
        // the rest is taper leakage into the two neighbouring shells
        assert!(p.mass[i] > (1.0 - 1e-4) * p.total(), "{:?}", p.mass);
    }

    #[test]
    fn b_zero_l2_matches_tapered_mass() {
        let g = Grid::new(30.0, 64).unwrap();
        let u0 = Field::from_fn(&g, |x| (-x * x / 2.0).exp() * (1.0 + x));
        let tr = Trace::sample(times(100, 0.02), |t| airy_propagate(&u0, t).scale(1.0 + t * t)).unwrap();
        let p = xsb_shells(&tr, (0.0, 2.0)).unwrap();
        let tapered: f64 = tr
            .times()
            .iter()
            .zip(tr.fields())
            .map(|(&t, f)| 0.02 * (taper(t / 1.98) * f.l2_norm_spectral()).powi(2))
            .sum();
        assert!((p.norm(0.0, 2.0).powi(2) - tapered).abs() < 1e-10 * tapered);
    }
}
