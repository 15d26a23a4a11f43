//! Fitted decomposition `u = R(λ(t), x(t)) + w`.
//!
//! Parameters minimise the weighted misfit
//! `J(λ, x_c) = ∫ |u - R_{λ,x_c}|² e^{-|x - x_c|} dx` by Gauss–Newton, with
//! the weight frozen at the current iterate. At a fixed point the residual
//! `u - R` is orthogonal to `∂R/∂λ` and `∂R/∂x_c` in the weighted inner
//! product.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{GkdvError, Result};
use crate::soliton::{q, q_prime, soliton_field, SolitonParams};
use crate::spectral::{derivative, Field, Grid, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the largest parameter update.
    pub tolerance: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Rate `a` of the weight `e^{-a|x - x_c|}`.
    pub weight_rate: f64,
    /// Largest accepted relative weighted residual.
    pub max_residual: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 50,
            tolerance: 1e-12,
            lambda_min: 0.25,
            lambda_max: 4.0,
            weight_rate: 1.0,
            max_residual: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fit {
    pub params: SolitonParams,
    /// `(∫(u-R)²ω / ∫R²ω)^{1/2}`.
    pub residual: f64,
    pub iterations: usize,
}

/// Weighted sums `(Σ ω a², Σ ω ab, Σ ω b², Σ ω a r, Σ ω b r, Σ ω r², Σ ω R²)`
/// times the grid spacing.
fn normal_sums(u: &[f64], grid: &Grid, p: &SolitonParams, rate: f64) -> [f64; 7] {
    let mut s = [0.0; 7];
    for (&x, &uj) in grid.points().iter().zip(u) {
        let d = grid.wrap_displacement(x, p.center);
        let w = (-rate * d.abs()).exp();
        let r_val = p.eval(grid, x);
        let (a, b) = p.gradients(grid, x);
        let r = uj - r_val;
        s[0] += w * a * a;
        s[1] += w * a * b;
        s[2] += w * b * b;
        s[3] += w * a * r;
        s[4] += w * b * r;
        s[5] += w * r * r;
        s[6] += w * r_val * r_val;
    }
    let h = grid.spacing();
    s.map(|v| v * h)
}

/// Weighted Gauss–Newton fit of `(λ, x_c)` from `init`.
pub fn fit_with(u: &Field, init: &SolitonParams, opts: &FitOptions) -> Result<Fit> {
    init.validate()?;
    let grid = u.grid();
    let vals = u.real_values();
    let mut p = *init;
    let diverged = |reason: String| GkdvError::FitDiverged { frame: None, reason };
    for it in 1..=opts.max_iterations {
        let s = normal_sums(&vals, grid, &p, opts.weight_rate);
        let det = s[0] * s[2] - s[1] * s[1];
        if !(det.abs() > 0.0) || !det.is_finite() {
            return Err(diverged(format!("singular normal equations at λ = {}", p.lambda)));
        }
        let dl = (s[2] * s[3] - s[1] * s[4]) / det;
        let dc = (s[0] * s[4] - s[1] * s[3]) / det;
        p.lambda += dl;
        p.center += dc;
        if !(p.lambda >= opts.lambda_min && p.lambda <= opts.lambda_max) || !p.center.is_finite() {
            return Err(diverged(format!("λ = {} left [{}, {}]", p.lambda, opts.lambda_min, opts.lambda_max)));
        }
        if dl.abs().max(dc.abs()) < opts.tolerance {
            let s = normal_sums(&vals, grid, &p, opts.weight_rate);
            let residual = (s[5] / s[6]).sqrt();
            if residual > opts.max_residual {
                return Err(diverged(format!("residual {residual:.3e} above {}", opts.max_residual)));
            }
            return Ok(Fit { params: p, residual, iterations: it });
        }
    }
    Err(diverged(format!("no convergence in {} iterations", opts.max_iterations)))
}

/// [`fit_with`] under default options, returning the parameters only.
pub fn fit_parameters(u: &Field, init: &SolitonParams) -> Result<SolitonParams> {
    fit_with(u, init, &FitOptions::default()).map(|f| f.params)
}

/// Weighted inner products of `u - R` with `∂R/∂λ` and `∂R/∂x_c`.
pub fn gauge_defect(u: &Field, p: &SolitonParams, weight_rate: f64) -> (f64, f64) {
    let s = normal_sums(&u.real_values(), u.grid(), p, weight_rate);
    (s[3], s[4])
}

/// Grid point of the largest value of `u`, a cold-start centre.
pub fn peak_location(u: &Field) -> f64 {
    let vals = u.real_values();
    let (j, _) = vals
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc });
    u.grid().points()[j]
}

/// Sampled `λ(t)`, `x(t)` with difference estimates of the derivatives.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModulationPath {
    pub times: Vec<f64>,
    pub lambda: Vec<f64>,
    pub center: Vec<f64>,
    pub lambda_prime: Vec<f64>,
    pub center_prime: Vec<f64>,
    pub fit_residual: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PathRow {
    t: f64,
    lambda: f64,
    x: f64,
    lambda_prime: f64,
    x_prime: f64,
    fit_residual: f64,
}

impl ModulationPath {
    /// Builds a path from fitted samples, filling in the derivatives.
    pub fn from_samples(times: Vec<f64>, params: &[SolitonParams], fit_residual: Vec<f64>) -> Self {
        let lambda: Vec<f64> = params.iter().map(|p| p.lambda).collect();
        let center: Vec<f64> = params.iter().map(|p| p.center).collect();
        let lambda_prime = difference(&times, &lambda);
        let center_prime = difference(&times, &center);
        ModulationPath { times, lambda, center, lambda_prime, center_prime, fit_residual }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn params(&self, i: usize) -> SolitonParams {
        SolitonParams::new(self.lambda[i], self.center[i])
    }

    /// Index of the sample at time `t` (within a relative 1e-9 of the spacing).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * self.times.windows(2).map(|w| w[1] - w[0]).fold(1.0, f64::min);
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for i in 0..self.len() {
            out.serialize(PathRow {
                t: self.times[i],
                lambda: self.lambda[i],
                x: self.center[i],
                lambda_prime: self.lambda_prime[i],
                x_prime: self.center_prime[i],
                fit_residual: self.fit_residual[i],
            })?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(r: impl Read) -> Result<Self> {
        let mut path = ModulationPath::default();
        for row in csv::Reader::from_reader(r).deserialize() {
            let row: PathRow = row?;
            path.times.push(row.t);
            path.lambda.push(row.lambda);
            path.center.push(row.x);
            path.lambda_prime.push(row.lambda_prime);
            path.center_prime.push(row.x_prime);
            path.fit_residual.push(row.fit_residual);
        }
        Ok(path)
    }
}

/// Second-order differences: centred inside, one-sided three-point at the
/// ends (two-point when only two samples exist).
pub fn difference(t: &[f64], f: &[f64]) -> Vec<f64> {
    let n = t.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        2 => {
            let d = (f[1] - f[0]) / (t[1] - t[0]);
            vec![d, d]
        }
        _ => (0..n)
            .map(|i| {
                let (i0, i1, i2) = if i == 0 {
                    (0, 1, 2)
                } else if i == n - 1 {
                    (n - 3, n - 2, n - 1)
                } else {
                    (i - 1, i, i + 1)
                };
                // derivative at t[i] of the quadratic through three samples
                let (a, b, c) = (t[i0], t[i1], t[i2]);
                let x = t[i];
                f[i0] * (2.0 * x - b - c) / ((a - b) * (a - c))
                    + f[i1] * (2.0 * x - a - c) / ((b - a) * (b - c))
                    + f[i2] * (2.0 * x - a - b) / ((c - a) * (c - b))
            })
            .collect(),
    }
}

/// `u = R + w` along a trace.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub path: ModulationPath,
    pub w: Trace,
    pub epsilon: f64,
}

impl Decomposition {
    pub fn grid(&self) -> &Grid {
        self.w.grid().expect("decomposition of an empty trace")
    }

    /// `R` at frame `i`.
    pub fn soliton(&self, i: usize) -> Field {
        soliton_field(self.grid(), &self.path.params(i))
    }
}

/// Fits every frame, warm-starting from the previous one. The first frame
/// starts from `λ = 1` at the peak of `u`.
pub fn decompose_trace(tr: &Trace, eps: f64) -> Result<Decomposition> {
    decompose_trace_with(tr, eps, None, &FitOptions::default())
}

pub fn decompose_trace_with(
    tr: &Trace,
    eps: f64,
    init: Option<SolitonParams>,
    opts: &FitOptions,
) -> Result<Decomposition> {
    if tr.is_empty() {
        return Err(GkdvError::InvalidArgument("cannot decompose an empty trace".into()));
    }
    let mut guess = init.unwrap_or_else(|| SolitonParams::new(1.0, peak_location(&tr.fields()[0])));
    let mut params = Vec::with_capacity(tr.len());
    let mut residuals = Vec::with_capacity(tr.len());
    let mut w = Trace::empty();
    for (i, (&t, u)) in tr.times().iter().zip(tr.fields()).enumerate() {
        let fit = fit_with(u, &guess, opts).map_err(|e| match e {
            GkdvError::FitDiverged { reason, .. } => GkdvError::FitDiverged { frame: Some(i), reason },
            other => other,
        })?;
        if i > 0 {
            let gap = t - tr.times()[i - 1];
            let jump = (fit.params.center - guess.center).abs();
            if jump > 2.0 * gap {
                return Err(GkdvError::FitDiverged {
                    frame: Some(i),
                    reason: format!("centre jumped by {jump:.3e} over a frame gap of {gap:.3e}"),
                });
            }
        }
        let r = soliton_field(u.grid(), &fit.params);
        w.push(t, &u.to_physical() - &r)?;
        params.push(fit.params);
        residuals.push(fit.residual);
        guess = fit.params;
    }
    let path = ModulationPath::from_samples(tr.times().to_vec(), &params, residuals);
    Ok(Decomposition { path, w, epsilon: eps })
}

/// Forcing `E` of `w_t + w_xxx + (w⁴)_x = E` at frame `i`:
///
/// ```text
/// E = (R⁴ + w⁴ - (R+w)⁴)_x + (2/3)(λ'/λ) R + (λ'/λ)(x - x_c) R_x + (x' - λ^{-2}) R_x
/// ```
///
/// evaluated pointwise with closed-form `R`, `R_x` and spectral `w_x`.
pub fn forcing_term(dec: &Decomposition, i: usize) -> Field {
    let grid = dec.grid().clone();
    let p = dec.path.params(i);
    let (l, lp, xp) = (p.lambda, dec.path.lambda_prime[i], dec.path.center_prime[i]);
    let w = dec.w.fields()[i].to_physical().real_values();
    let wx = derivative(&dec.w.fields()[i], 1).real_values();
    let scale = l.powf(-2.0 / 3.0);
    let values = grid
        .points()
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let d = grid.wrap_displacement(x, p.center);
            let y = d / l;
            let r = scale * q(y);
            let rx = scale / l * q_prime(y);
            let (wj, wxj) = (w[j], wx[j]);
            // -(4R³w + 6R²w² + 4Rw³)_x
            let cross = -(12.0 * r * r * rx * wj
                + 4.0 * r * r * r * wxj
                + 12.0 * r * rx * wj * wj
                + 12.0 * r * r * wj * wxj
                + 4.0 * rx * wj * wj * wj
                + 12.0 * r * wj * wj * wxj);
            cross + (2.0 / 3.0) * (lp / l) * r + (lp / l) * d * rx + (xp - l.powi(-2)) * rx
        })
        .collect();
    Field::from_real(&grid, values).expect("grid-sized vector")
}

/// `‖w_t + w_xxx + (w⁴)_x - E‖_{L²}` at an interior frame, with `w_t` by a
/// centred difference of the neighbouring frames.
pub fn w_equation_residual(dec: &Decomposition, i: usize) -> Result<f64> {
    let n = dec.w.len();
    if i == 0 || i + 1 >= n {
        return Err(GkdvError::InvalidArgument(format!("frame {i} has no two neighbours")));
    }
    let t = dec.w.times();
    let f = dec.w.fields();
    let wt = (&f[i + 1] - &f[i - 1]).scale(1.0 / (t[i + 1] - t[i - 1]));
    let grid = dec.grid();
    let w = &f[i];
    let wxxx = derivative(w, 3);
    let coeffs = w.spectral();
    let w4 = Field::from_spectral(grid, grid.dealiased_power(&coeffs, 4, true), true)?;
    let lhs = &(&wt + &wxxx) + &derivative(&w4, 1);
    Ok((&lhs - &forcing_term(dec, i)).l2_norm())
}

/// Per-frame diagnostics of the decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulationDiagnostics {
    pub epsilon: f64,
    pub sup_w_h1: f64,
    /// `sup_t ‖w‖_{H¹} / ε`; absent for `ε = 0`.
    pub h1_constant: Option<f64>,
    /// `max_t (|λ'| + |x' - λ^{-2}|²) / ∫ w² e^{-|x - x(t)|/2}`.
    pub rate_constant: f64,
    /// The same with `|x' - λ^{-2}|` unsquared.
    pub linear_rate_constant: f64,
    /// `∫∫ |E|² e^{|x - x(t)|} dx dt` over the trace (trapezoid in time).
    pub forcing_integral: f64,
    /// `forcing_integral / ε²`; absent for `ε = 0`.
    pub forcing_constant: Option<f64>,
    pub final_lambda: f64,
}

/// `‖f‖_{H¹}² = ∫ f² + f_x²`.
pub fn h1_norm(f: &Field) -> f64 {
    let fx = derivative(f, 1);
    (f.l2_norm_spectral().powi(2) + fx.l2_norm_spectral().powi(2)).sqrt()
}

/// `∫ f² e^{-a|x - c|} dx`.
pub fn weighted_mass(f: &Field, center: f64, rate: f64) -> f64 {
    let grid = f.grid();
    let vals = f.real_values();
    grid.points()
        .iter()
        .zip(&vals)
        .map(|(&x, &v)| v * v * (-rate * grid.wrap_displacement(x, center).abs()).exp())
        .sum::<f64>()
        * grid.spacing()
}

pub fn diagnostics(dec: &Decomposition) -> ModulationDiagnostics {
    let n = dec.w.len();
    let eps = dec.epsilon;
    let mut sup_h1 = 0.0f64;
    let mut rate = 0.0f64;
    let mut linear_rate = 0.0f64;
    let mut forcing = Vec::with_capacity(n);
    let grid = dec.grid().clone();
    for i in 0..n {
        let w = &dec.w.fields()[i];
        sup_h1 = sup_h1.max(h1_norm(w));
        let l = dec.path.lambda[i];
        let drift = (dec.path.center_prime[i] - l.powi(-2)).abs();
        let rhs = weighted_mass(w, dec.path.center[i], 0.5);
        if rhs > 0.0 {
            rate = rate.max((dec.path.lambda_prime[i].abs() + drift * drift) / rhs);
            linear_rate = linear_rate.max((dec.path.lambda_prime[i].abs() + drift) / rhs);
        }
        let e = forcing_term(dec, i).real_values();
        let c = dec.path.center[i];
        let v: f64 = grid
            .points()
            .iter()
            .zip(&e)
            // in log form: E decays like R while the weight overflows
            .map(|(&x, &ej)| {
                if ej == 0.0 {
                    0.0
                } else {
                    (2.0 * ej.abs().ln() + grid.wrap_displacement(x, c).abs()).exp()
                }
            })
            .sum::<f64>()
            * grid.spacing();
        forcing.push(v);
    }
    let forcing_integral = trapezoid(dec.w.times(), &forcing);
    let ratio = |v: f64, s: f64| (s > 0.0).then(|| v / s);
    ModulationDiagnostics {
        epsilon: eps,
        sup_w_h1: sup_h1,
        h1_constant: ratio(sup_h1, eps),
        rate_constant: rate,
        linear_rate_constant: linear_rate,
        forcing_integral,
        forcing_constant: ratio(forcing_integral, eps * eps),
        final_lambda: dec.path.lambda.last().copied().unwrap_or(f64::NAN),
    }
}

/// Trapezoid rule over (possibly non-uniform) samples.
pub fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    t.windows(2).zip(f.windows(2)).map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1])).sum()
}
