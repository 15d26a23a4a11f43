use serde::{Deserialize, Serialize};

use crate::error::{GkdvError, Result};
use crate::modulation::{trapezoid, ModulationPath};
use crate::report::Report;
use crate::spectral::{derivative, Field, Trace};

fn check_path(tr: &Trace, path: &ModulationPath) -> Result<Vec<usize>> {
    tr.times()
        .iter()
        .map(|&t| {
            path.index_of(t)
                .ok_or_else(|| GkdvError::InvalidArgument(format!("modulation path has no sample at t = {t}")))
        })
        .collect()
}

/// `∫ f(x) g(x - c)` over the box, with `x - c` folded periodically.
fn weighted(f: &[f64], u: &Field, center: f64, g: impl Fn(f64) -> f64) -> f64 {
    let grid = u.grid();
    grid.points()
        .iter()
        .zip(f)
        .map(|(&x, &v)| v * g(grid.wrap_displacement(x, center)))
        .sum::<f64>()
        * grid.spacing()
}

/// `∫∫ (u² + u_x²) e^{-σ|x - x(t)|} dx dt` over the trace, dropping `u_x²`
/// when `with_derivative` is off. Trapezoid in time.
pub fn kato_weighted_integral(tr: &Trace, path: &ModulationPath, sigma: f64, with_derivative: bool) -> Result<f64> {
    let idx = check_path(tr, path)?;
    let vals: Vec<f64> = tr
        .fields()
        .iter()
        .zip(&idx)
        .map(|(u, &i)| {
            let mut dens: Vec<f64> = u.real_values().iter().map(|v| v * v).collect();
            if with_derivative {
                for (d, v) in dens.iter_mut().zip(derivative(u, 1).real_values()) {
                    *d += v * v;
                }
            }
            weighted(&dens, u, path.center[i], |d| (-sigma * d.abs()).exp())
        })
        .collect();
    Ok(trapezoid(tr.times(), &vals))
}

/// `∫ tanh((x - c)/s) u² dx`.
pub fn tanh_weight_mass(u: &Field, center: f64, scale: f64) -> f64 {
    let dens: Vec<f64> = u.real_values().iter().map(|v| v * v).collect();
    weighted(&dens, u, center, |d| (d / scale).tanh())
}

/// Discrete check of the local smoothing identity for `ψ(x) = tanh(x/s)`
/// along `x(t)`:
///
/// ```text
/// d/dt ∫ψ(x - x(t))u² + x' ∫ψ'u² + 3∫ψ'u_x² - ∫ψ'''u² - (2p/(p+1))∫ψ'u^{p+1} = 0
/// ```
///
/// for `u_t + u_xxx + (u^p)_x = 0`; the last term is absent for the Airy
/// flow. With `x' = 1` the first three terms combine into
/// `∫(ψ' - ψ''')u² + 3∫ψ'u_x²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KatoMonitor {
    pub psi_scale: f64,
    pub times: Vec<f64>,
    /// `∫ψ(x - x(t))u²` at every frame.
    pub weighted_mass: Vec<f64>,
    /// Interior frames only; the time derivative is a centred difference.
    pub residual_times: Vec<f64>,
    pub residual: Vec<f64>,
    pub max_abs_residual: f64,
    /// `∫|residual| dt` over the interior span, divided by its length.
    pub mean_abs_residual: f64,
    /// Largest frame-to-frame increase of the weighted mass (0 if none).
    pub max_increase: f64,
}

impl KatoMonitor {
    pub fn to_report(&self) -> Report {
        let mut r = Report::new("kato_identity");
        r.push("psi_scale", self.psi_scale)
            .push("max_abs_residual", self.max_abs_residual)
            .push_note("mean_abs_residual", self.mean_abs_residual, "per unit time")
            .push("max_increase", self.max_increase);
        r
    }
}

pub fn kato_identity_monitor(
    tr: &Trace,
    path: &ModulationPath,
    psi_scale: f64,
    power: Option<u32>,
) -> Result<KatoMonitor> {
    if tr.len() < 3 {
        return Err(GkdvError::InvalidArgument("the Kato monitor needs at least three frames".into()));
    }
    let idx = check_path(tr, path)?;
    let s = psi_scale;
    let sech2 = |d: f64| {
        let c = (d / s).cosh();
        1.0 / (c * c)
    };
    let psi1 = |d: f64| sech2(d) / s;
    let psi3 = |d: f64| {
        let (q, th) = (sech2(d), (d / s).tanh());
        (4.0 * q * th * th - 2.0 * q * q) / (s * s * s)
    };
    let times = tr.times();
    let mass: Vec<f64> = tr.fields().iter().zip(&idx).map(|(u, &i)| tanh_weight_mass(u, path.center[i], s)).collect();
    let mut residual = Vec::new();
    let mut rt = Vec::new();
    for j in 1..tr.len() - 1 {
        let u = &tr.fields()[j];
        let c = path.center[idx[j]];
        let xp = path.center_prime[idx[j]];
        let v = u.real_values();
        let u2: Vec<f64> = v.iter().map(|a| a * a).collect();
        let ux2: Vec<f64> = derivative(u, 1).real_values().iter().map(|a| a * a).collect();
        let dt = (mass[j + 1] - mass[j - 1]) / (times[j + 1] - times[j - 1]);
        let mut r = dt + xp * weighted(&u2, u, c, psi1) + 3.0 * weighted(&ux2, u, c, psi1) - weighted(&u2, u, c, psi3);
        if let Some(p) = power {
            let up: Vec<f64> = v.iter().map(|a| a.powi(p as i32 + 1)).collect();
            r -= 2.0 * p as f64 / (p as f64 + 1.0) * weighted(&up, u, c, psi1);
        }
        residual.push(r);
        rt.push(times[j]);
    }
    let abs: Vec<f64> = residual.iter().map(|r| r.abs()).collect();
    let span = rt.last().unwrap() - rt[0];
    let mean_abs_residual = if span > 0.0 { trapezoid(&rt, &abs) / span } else { abs[0] };
    let max_increase = mass.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok(KatoMonitor {
        psi_scale,
        times: times.to_vec(),
        weighted_mass: mass,
        max_abs_residual: abs.iter().copied().fold(0.0, f64::max),
        residual_times: rt,
        residual,
        mean_abs_residual,
        max_increase,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::SolitonParams;
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    fn resting_path(times: &[f64], center: f64) -> ModulationPath {
        let p = vec![SolitonParams::new(1.0, center); times.len()];
        ModulationPath::from_samples(times.to_vec(), &p, vec![0.0; times.len()])
    }

    #[test]
    fn zero_field_gives_zero() {
        let g = Grid::new(20.0, 64).unwrap();
        let t = vec![0.0, 0.1, 0.2];
        let tr = Trace::sample(t.clone(), |_| Field::zeros(&g)).unwrap();
        let path = resting_path(&t, 0.0);
        assert_eq!(kato_weighted_integral(&tr, &path, 1.0, true).unwrap(), 0.0);
        let m = kato_identity_monitor(&tr, &path, 100.0, None).unwrap();
        assert_eq!(m.max_abs_residual, 0.0);
    }

    #[test]
    fn distant_gaussian_matches_closed_form() {
        // ∫ e^{-2(x-a)²} e^{-σ|x|} dx ≈ √(π/2) e^{-σa + σ²/8} for a ≫ 1
        let g = Grid::new(200.0, 2048).unwrap();
        let (a, sigma) = (30.0, 1.0);
        let u = Field::from_fn(&g, |x| (-(x - a) * (x - a)).exp());
        let t = vec![0.0, 1.0];
        let tr = Trace::sample(t.clone(), |_| u.clone()).unwrap();
        let v = kato_weighted_integral(&tr, &resting_path(&t, 0.0), sigma, false).unwrap();
        let expect = (PI / 2.0).sqrt() * (-sigma * a + sigma * sigma / 8.0).exp();
        assert!(((v - expect) / expect).abs() < 1e-2, "{v} {expect}");
    }

    #[test]
    fn path_must_cover_trace() {
        let g = Grid::new(20.0, 64).unwrap();
        let tr = Trace::sample(vec![0.0, 0.1, 0.2], |_| Field::zeros(&g)).unwrap();
        let path = resting_path(&[0.0, 0.1], 0.0);
        assert!(kato_weighted_integral(&tr, &path, 1.0, true).is_err());
    }
}
