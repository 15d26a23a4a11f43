use num_complex::Complex64;
use rustfft::FftPlanner;

use super::strichartz::EstimateSample;
use super::{sobolev_norm, uniform_window};
use crate::error::{GkdvError, Result};
use crate::modulation::trapezoid;
use crate::solver::airy_propagate;
use crate::spectral::{ensure_mean_free, riesz_project, smooth_fft_len, Field, Grid, RieszSign, Trace};

fn matched_windows(traces: &[&Trace], window: (f64, f64)) -> Result<Vec<Trace>> {
    let subs: Vec<Trace> = traces.iter().map(|t| uniform_window(t, window)).collect::<Result<_>>()?;
    let first = &subs[0];
    for s in &subs[1..] {
        if s.grid() != first.grid() {
            return Err(GkdvError::GridMismatch("traces live on different grids".into()));
        }
        if s.len() != first.len() || s.times().iter().zip(first.times()).any(|(a, b)| (a - b).abs() > 1e-9) {
            return Err(GkdvError::InvalidArgument("traces are sampled at different times".into()));
        }
    }
    Ok(subs)
}

/// Retained `(mode number, coefficient)` pairs.
fn retained(f: &Field) -> Vec<(i64, Complex64)> {
    let g = f.grid();
    f.spectral()
        .iter()
        .enumerate()
        .filter(|&(k, c)| g.is_retained(k) && *c != Complex64::new(0.0, 0.0))
        .map(|(k, &c)| (g.mode_number(k), c))
        .collect()
}

/// [`retained`] minus coefficients below `1e-13` of the largest, which
/// cannot move the sum at double precision.
fn significant(f: &Field) -> Vec<(i64, Complex64)> {
    let all = retained(f);
    let top = all.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
    all.into_iter().filter(|(_, c)| c.norm() >= 1e-13 * top).collect()
}

/// `‖B(u, v)(t)‖²_{L²}` for `B̂(η) = Σ_{ξ₁+ξ₂=η} m(ξ₁, ξ₂) û(ξ₁) v̂(ξ₂)`.
fn bilinear_frame(u: &Field, v: &Field) -> f64 {
    let g = u.grid();
    let dk = 2.0 * std::f64::consts::PI / g.box_length();
    let a = significant(u);
    let b = significant(v);
    let k = g.modes() as i64;
    let mut out = vec![Complex64::new(0.0, 0.0); 2 * k as usize + 1];
    for &(n1, c1) in &a {
        for &(n2, c2) in &b {
            let m = (((n1 + n2).abs() * (n1 - n2).abs()) as f64).sqrt() * dk;
            out[(n1 + n2 + k) as usize] += c1 * c2 * m;
        }
    }
    g.box_length() * out.iter().map(|c| c.norm_sqr()).sum::<f64>()
}

/// `‖B(u, v)‖_{L²_{t,x}}` over `window` for the bilinear form with symbol
/// `m(ξ₁, ξ₂) = |ξ₁ + ξ₂|^{1/2} |ξ₁ - ξ₂|^{1/2}`. The product is formed
/// mode by mode, so no aliasing occurs.
pub fn bilinear_functional(u: &Trace, v: &Trace, window: (f64, f64)) -> Result<f64> {
    let subs = matched_windows(&[u, v], window)?;
    let vals: Vec<f64> = subs[0].fields().iter().zip(subs[1].fields()).map(|(a, b)| bilinear_frame(a, b)).collect();
    if vals.len() == 1 {
        return Ok(vals[0].sqrt());
    }
    Ok(trapezoid(subs[0].times(), &vals).sqrt())
}

/// `‖f₁f₂f₃f₄‖_{Ḣ^{1/2}}` from the full product spectrum, on a padded grid
/// wide enough to hold every output frequency.
fn quartic_half_norm(factors: [&Field; 4]) -> f64 {
    let g: &Grid = factors[0].grid();
    let keep = g.dealias_keep();
    let p = smooth_fft_len(8 * keep + 1);
    let mut planner = FftPlanner::new();
    let inv = planner.plan_fft_inverse(p);
    let fwd = planner.plan_fft_forward(p);
    let mut acc = vec![Complex64::new(1.0, 0.0); p];
    for f in factors {
        let mut buf = vec![Complex64::new(0.0, 0.0); p];
        for (n, c) in retained(f) {
            buf[n.rem_euclid(p as i64) as usize] = c;
        }
        inv.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a *= b;
        }
    }
    fwd.process(&mut acc);
    let dk = 2.0 * std::f64::consts::PI / g.box_length();
    let inv_p = 1.0 / p as f64;
    let sum: f64 = acc
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let n = if j <= p / 2 { j as f64 } else { j as f64 - p as f64 };
            (n.abs() * dk) * (c * inv_p).norm_sqr()
        })
        .sum();
    (sum * g.box_length()).sqrt()
}

/// `‖(P₊u₁)(P₊u₂)(P₋u₃)(P₋u₄)‖_{L¹_t Ḣ^{1/2}_x}` over `window`. Inputs must
/// be mean-free.
pub fn quartilinear_functional(u: [&Trace; 4], window: (f64, f64)) -> Result<f64> {
    let subs = matched_windows(&u, window)?;
    for s in &subs {
        ensure_mean_free(&s.fields()[0])?;
    }
    let signs = [RieszSign::Plus, RieszSign::Plus, RieszSign::Minus, RieszSign::Minus];
    let vals: Vec<f64> = (0..subs[0].len())
        .map(|i| {
            let p: Vec<Field> = (0..4).map(|j| riesz_project(&subs[j].fields()[i], signs[j])).collect();
            quartic_half_norm([&p[0], &p[1], &p[2], &p[3]])
        })
        .collect();
    if vals.len() == 1 {
        return Ok(vals[0]);
    }
    Ok(trapezoid(subs[0].times(), &vals))
}

/// Quartilinear functional of the free waves `e^{-t∂xxx}u_{j,0}` over
/// `times`, against `Π‖u_{j,0}‖_{Ḣ^{-1/4}}`.
pub fn quartilinear_ratio(u0: [&Field; 4], times: &[f64]) -> Result<EstimateSample> {
    let traces: Vec<Trace> = u0
        .iter()
        .map(|f| Trace::sample(times.to_vec(), |t| airy_propagate(f, t)))
        .collect::<Result<_>>()?;
    let window = (times[0], *times.last().unwrap());
    let num = quartilinear_functional([&traces[0], &traces[1], &traces[2], &traces[3]], window)?;
    let mut den = 1.0;
    for f in u0 {
        den *= sobolev_norm(f, -0.25, true)?;
    }
    EstimateSample::new("quartilinear_l1t_h12", format!("free waves over [{}, {}]", window.0, window.1), num, den)
}
