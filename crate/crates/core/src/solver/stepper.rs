use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::conserved::ConservedSample;
use super::propagate::wrap_horizon;
use super::sponge::Sponge;
use crate::error::{GkdvError, Result};
use crate::spectral::{Field, Grid, Trace};
use crate::spectral::grid::ipow;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Points on the contour used to evaluate the ETDRK4 coefficients.
const CONTOUR_POINTS: usize = 64;

const SQRT3_6: f64 = 0.288_675_134_594_812_9;
const GAUSS_NODES: [f64; 2] = [0.5 - SQRT3_6, 0.5 + SQRT3_6];
const GAUSS_A: [[f64; 2]; 2] = [[0.25, 0.25 - SQRT3_6], [0.25 + SQRT3_6, 0.25]];
const GAUSS_MAX_ITERATIONS: usize = 200;
/// Stage iteration stops once `dt·max|ΔK| ≤ GAUSS_TOLERANCE·max|c|`.
const GAUSS_TOLERANCE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeScheme {
    /// Classical RK4 in the interaction frame `v = e^{t∂xxx} u`.
    IntegratingFactorRk4,
    /// Cox–Matthews exponential time differencing RK4.
    Etdrk4,
    /// Krogstad's variant of ETDRK4.
    Krogstad,
    /// Two-stage Gauss–Legendre collocation in the interaction frame, with
    /// the stage equations solved by fixed-point iteration. Conserves
    /// `∫u²` up to the iteration tolerance.
    #[default]
    IntegratingFactorGauss4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Power `p` of the nonlinearity `(u^p)_x`.
    pub power: u32,
    pub nonlinearity: bool,
    pub sponge: Option<Sponge>,
    pub snapshot_stride: usize,
    pub scheme: TimeScheme,
    /// Constant `c` in the step bound `dt ≤ c / (max|u0|^{p-1} max|ξ|)`.
    pub cfl_constant: f64,
    /// Blowup ceiling as a multiple of `‖u0‖_∞`.
    pub blowup_factor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 1e-3,
            t_end: 10.0,
            power: 4,
            nonlinearity: true,
            sponge: None,
            snapshot_stride: 100,
            scheme: TimeScheme::default(),
            cfl_constant: 0.5,
            blowup_factor: 1e6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GkdvError::ConfigInvalid(m));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return bad(format!("t_end = {} must be non-negative", self.t_end));
        }
        if self.power < 2 {
            return bad(format!("nonlinearity power {} must be at least 2", self.power));
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride must be positive".into());
        }
        if !(self.cfl_constant > 0.0) || !(self.blowup_factor > 1.0) {
            return bad("cfl_constant must be positive and blowup_factor above 1".into());
        }
        if let Some(s) = &self.sponge {
            if !(s.width > 0.0 && s.strength >= 0.0) {
                return bad(format!("sponge width {} / strength {} invalid", s.width, s.strength));
            }
        }
        Ok(())
    }

    pub fn step_count(&self) -> u64 {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as u64
    }

    /// Largest step allowed by the nonlinear CFL-type bound for data `u0`.
    pub fn cfl_limit(&self, u0: &Field) -> f64 {
        let amp = u0.sup_norm().powi(self.power as i32 - 1);
        let xi = u0.grid().max_wavenumber();
        if amp == 0.0 {
            f64::INFINITY
        } else {
            self.cfl_constant / (amp * xi)
        }
    }
}

/// Mutable state of one simulation.
#[derive(Clone, Debug)]
pub struct RunState {
    pub field: Field,
    pub time: f64,
    pub steps: u64,
    pub trace: Trace,
    pub history: Vec<ConservedSample>,
}

impl RunState {
    pub fn new(u0: &Field) -> Self {
        RunState {
            field: u0.to_spectral(),
            time: 0.0,
            steps: 0,
            trace: Trace::empty(),
            history: Vec::new(),
        }
    }
}

/// Precomputed per-mode factors for one grid and configuration.
pub struct Stepper {
    grid: Grid,
    pad_grid: Grid,
    dt: f64,
    power: u32,
    nonlinear: bool,
    real: bool,
    ceiling: f64,
    scheme: TimeScheme,
    /// `-iξ` on retained modes, zero elsewhere.
    ddx: Vec<Complex64>,
    full: Vec<Complex64>,
    half: Vec<Complex64>,
    /// `e^{c_j dt L}` at the two Gauss nodes.
    nodes: [Vec<Complex64>; 2],
    coeffs: Etd4Coeffs,
    sponge: Option<Vec<f64>>,
}

#[derive(Clone, Default)]
struct Etd4Coeffs {
    /// `h/2 φ1(z/2)`
    q: Vec<Complex64>,
    /// `h φ2(z/2)`
    q2: Vec<Complex64>,
    /// `h φ1(z)`
    p1: Vec<Complex64>,
    /// `h φ2(z)`
    p2: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

impl Stepper {
    /// `ceiling` is the absolute sup-norm at which blowup is declared.
    pub fn new(grid: &Grid, cfg: &SolverConfig, ceiling: f64) -> Result<Self> {
        cfg.validate()?;
        let pad_grid = if grid.product_order() == cfg.power as usize {
            grid.clone()
        } else {
            grid.with_product_order(cfg.power as usize)?
        };
        let dt = cfg.dt;
        let xi = grid.wavenumbers();
        let linear: Vec<Complex64> = xi.iter().map(|&k| Complex64::new(0.0, k * k * k)).collect();
        let full = linear.iter().map(|l| (l * dt).exp()).collect();
        let nodes = GAUSS_NODES.map(|c| linear.iter().map(|l| (l * (c * dt)).exp()).collect());
        let half = linear.iter().map(|l| (l * (0.5 * dt)).exp()).collect();
        let ddx = (0..grid.modes())
            .map(|idx| if grid.is_retained(idx) { Complex64::new(0.0, -xi[idx]) } else { ZERO })
            .collect();
        let coeffs = match cfg.scheme {
            TimeScheme::Etdrk4 | TimeScheme::Krogstad => Etd4Coeffs::new(&linear, dt),
            TimeScheme::IntegratingFactorRk4 | TimeScheme::IntegratingFactorGauss4 => Etd4Coeffs::default(),
        };
        let sponge = cfg
            .sponge
            .map(|s| s.profile(grid).into_iter().map(|rate| (-dt * rate).exp()).collect());
        Ok(Stepper {
            grid: grid.clone(),
            pad_grid,
            dt,
            power: cfg.power,
            nonlinear: cfg.nonlinearity,
            real: true,
            ceiling,
            scheme: cfg.scheme,
            ddx,
            full,
            half,
            nodes,
            coeffs,
            sponge,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `-∂x(u^p)` in coefficient space, dealiased. Returns the sup of `u`
    /// over the padded samples alongside.
    fn nonlinear_term(&self, c: &[Complex64]) -> (Vec<Complex64>, f64) {
        let mut padded = self.pad_grid.to_padded(c);
        let mut sup = 0.0f64;
        let p = self.power;
        for v in padded.iter_mut() {
            if self.real {
                sup = sup.max(v.re.abs());
                *v = Complex64::new(ipow(v.re, p), 0.0);
            } else {
                sup = sup.max(v.norm());
                *v = v.powu(p);
            }
        }
        let mut out = self.pad_grid.from_padded(padded);
        for (o, d) in out.iter_mut().zip(&self.ddx) {
            *o *= d;
        }
        (out, sup)
    }

    /// [`Self::nonlinear_term`] for two states at once; real states share
    /// one pair of transforms.
    fn nonlinear_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        if !self.real {
            return (self.nonlinear_term(a).0, self.nonlinear_term(b).0);
        }
        let p = self.power;
        let mut padded = self.pad_grid.to_padded_pair(a, b);
        for v in padded.iter_mut() {
            *v = Complex64::new(ipow(v.re, p), ipow(v.im, p));
        }
        let (mut fa, mut fb) = self.pad_grid.from_padded_pair(padded);
        for ((x, y), d) in fa.iter_mut().zip(fb.iter_mut()).zip(&self.ddx) {
            *x *= d;
            *y *= d;
        }
        (fa, fb)
    }

    /// Advances the coefficient array by one step and returns the sup norm
    /// of the state at the start of the step.
    fn advance(&self, c: &mut [Complex64], t: f64) -> Result<f64> {
        let sup;
        if !self.nonlinear {
            for (v, e) in c.iter_mut().zip(&self.full) {
                *v *= e;
            }
            sup = f64::NAN;
        } else {
            match self.scheme {
                TimeScheme::Etdrk4 => sup = self.etdrk4(c),
                TimeScheme::Krogstad => sup = self.krogstad(c),
                TimeScheme::IntegratingFactorGauss4 => sup = self.if_gauss(c)?,
                TimeScheme::IntegratingFactorRk4 => sup = self.ifrk4(c),
            }
            if self.real {
                symmetrize(&self.grid, c);
            }
        }
        if let Some(damp) = &self.sponge {
            let mut phys = self.grid.inverse(c);
            for (v, d) in phys.iter_mut().zip(damp) {
                *v *= d;
                if self.real {
                    v.im = 0.0;
                }
            }
            self.grid.forward_in_place(&mut phys);
            c.copy_from_slice(&phys);
        }
        if sup > self.ceiling || c.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(GkdvError::BlowupDetected { time: t, sup, ceiling: self.ceiling });
        }
        Ok(sup)
    }

    fn etdrk4(&self, c: &mut [Complex64]) -> f64 {
        let Etd4Coeffs { q, f1, f2, f3, .. } = &self.coeffs;
        let e2 = &self.half;
        let (nu, sup) = self.nonlinear_term(c);
        let a: Vec<Complex64> = (0..c.len()).map(|i| e2[i] * c[i] + q[i] * nu[i]).collect();
        let (na, _) = self.nonlinear_term(&a);
        let b: Vec<Complex64> = (0..c.len()).map(|i| e2[i] * c[i] + q[i] * na[i]).collect();
        let (nb, _) = self.nonlinear_term(&b);
        let cc: Vec<Complex64> = (0..c.len()).map(|i| e2[i] * a[i] + q[i] * (2.0 * nb[i] - nu[i])).collect();
        let (nc, _) = self.nonlinear_term(&cc);
        for i in 0..c.len() {
            c[i] = self.full[i] * c[i] + f1[i] * nu[i] + 2.0 * f2[i] * (na[i] + nb[i]) + f3[i] * nc[i];
        }
        sup
    }

    fn krogstad(&self, c: &mut [Complex64]) -> f64 {
        let Etd4Coeffs { q, q2, p1, p2, f1, f2, f3 } = &self.coeffs;
        let e2 = &self.half;
        let e = &self.full;
        let n = c.len();
        let (nu, sup) = self.nonlinear_term(c);
        let a: Vec<Complex64> = (0..n).map(|i| e2[i] * c[i] + q[i] * nu[i]).collect();
        let (na, _) = self.nonlinear_term(&a);
        let b: Vec<Complex64> = (0..n).map(|i| a[i] + q2[i] * (na[i] - nu[i])).collect();
        let (nb, _) = self.nonlinear_term(&b);
        let cc: Vec<Complex64> = (0..n).map(|i| e[i] * c[i] + p1[i] * nu[i] + 2.0 * p2[i] * (nb[i] - nu[i])).collect();
        let (nc, _) = self.nonlinear_term(&cc);
        for i in 0..n {
            c[i] = e[i] * c[i] + f1[i] * nu[i] + 2.0 * f2[i] * (na[i] + nb[i]) + f3[i] * nc[i];
        }
        sup
    }

    fn if_gauss(&self, c: &mut [Complex64]) -> Result<f64> {
        let dt = self.dt;
        let n = c.len();
        let (n0, sup) = self.nonlinear_term(c);
        let mut k = [n0.clone(), n0];
        let scale = c.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max).sqrt().max(f64::MIN_POSITIVE);
        let mut last = f64::INFINITY;
        for _ in 0..GAUSS_MAX_ITERATIONS {
            let stages: Vec<Vec<Complex64>> = (0..2)
                .map(|j| {
                    let a = GAUSS_A[j];
                    let e = &self.nodes[j];
                    (0..n).map(|i| e[i] * (c[i] + dt * (a[0] * k[0][i] + a[1] * k[1][i]))).collect()
                })
                .collect();
            let (mut k0, mut k1) = self.nonlinear_pair(&stages[0], &stages[1]);
            for (v, e) in k0.iter_mut().zip(&self.nodes[0]) {
                *v *= e.conj();
            }
            for (v, e) in k1.iter_mut().zip(&self.nodes[1]) {
                *v *= e.conj();
            }
            let next = [k0, k1];
            let change = (0..2)
                .flat_map(|j| k[j].iter().zip(&next[j]).map(|(a, b)| (a - b).norm_sqr()))
                .fold(0.0, f64::max)
                .sqrt()
                * dt;
            k = next;
            if change <= GAUSS_TOLERANCE * scale || (change >= last && change <= 1e2 * GAUSS_TOLERANCE * scale) {
                for i in 0..n {
                    c[i] = self.full[i] * (c[i] + 0.5 * dt * (k[0][i] + k[1][i]));
                }
                return Ok(sup);
            }
            last = change;
        }
        Err(GkdvError::ConfigInvalid(format!("stage iteration did not converge at dt = {dt}")))
    }

    fn ifrk4(&self, c: &mut [Complex64]) -> f64 {
        let dt = self.dt;
        let e2 = &self.half;
        let e = &self.full;
        let n = c.len();
        let (mut k1, sup) = self.nonlinear_term(c);
        k1.iter_mut().for_each(|v| *v *= dt);
        let s2: Vec<Complex64> = (0..n).map(|i| e2[i] * (c[i] + 0.5 * k1[i])).collect();
        let (mut k2, _) = self.nonlinear_term(&s2);
        k2.iter_mut().for_each(|v| *v *= dt);
        let s3: Vec<Complex64> = (0..n).map(|i| e2[i] * c[i] + 0.5 * k2[i]).collect();
        let (mut k3, _) = self.nonlinear_term(&s3);
        k3.iter_mut().for_each(|v| *v *= dt);
        let s4: Vec<Complex64> = (0..n).map(|i| e[i] * c[i] + e2[i] * k3[i]).collect();
        let (mut k4, _) = self.nonlinear_term(&s4);
        k4.iter_mut().for_each(|v| *v *= dt);
        for i in 0..n {
            c[i] = e[i] * c[i] + (e[i] * k1[i] + 2.0 * e2[i] * (k2[i] + k3[i]) + k4[i]) / 6.0;
        }
        sup
    }

    /// Advances `state` by one step in place.
    pub fn step_in_place(&self, state: &mut RunState) -> Result<()> {
        if state.field.grid() != &self.grid {
            return Err(GkdvError::GridMismatch("state and stepper grids differ".into()));
        }
        let real = state.field.is_real_valued();
        let mut c = state.field.spectral().into_owned();
        let t_next = (state.steps + 1) as f64 * self.dt;
        if real == self.real {
            self.advance(&mut c, t_next)?;
        } else {
            let mut complex = Stepper { real, ..self.shallow() };
            complex.real = real;
            complex.advance(&mut c, t_next)?;
        }
        state.field = Field::from_spectral(&self.grid, c, real)?;
        state.steps += 1;
        state.time = t_next;
        Ok(())
    }

    fn shallow(&self) -> Stepper {
        Stepper {
            grid: self.grid.clone(),
            pad_grid: self.pad_grid.clone(),
            dt: self.dt,
            power: self.power,
            nonlinear: self.nonlinear,
            real: self.real,
            ceiling: self.ceiling,
            scheme: self.scheme,
            ddx: self.ddx.clone(),
            full: self.full.clone(),
            half: self.half.clone(),
            nodes: self.nodes.clone(),
            coeffs: self.coeffs.clone(),
            sponge: self.sponge.clone(),
        }
    }
}

impl Etd4Coeffs {
    /// Kassam–Trefethen contour evaluation of the ETDRK4 weights for the
    /// diagonal linear operator `linear`.
    fn new(linear: &[Complex64], dt: f64) -> Self {
        let roots: Vec<Complex64> = (0..CONTOUR_POINTS)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / CONTOUR_POINTS as f64))
            .collect();
        let n = CONTOUR_POINTS as f64;
        let mut out = Etd4Coeffs::default();
        for l in linear {
            let z = l * dt;
            let (mut q, mut q2, mut p1, mut p2) = (ZERO, ZERO, ZERO, ZERO);
            let (mut f1, mut f2, mut f3) = (ZERO, ZERO, ZERO);
            for root in &roots {
                let r = z + root;
                let er = r.exp();
                let r3 = r * r * r;
                let rh = r * 0.5;
                let erh = rh.exp();
                q += (erh - 1.0) / r;
                q2 += (erh - 1.0 - rh) / (rh * rh);
                p1 += (er - 1.0) / r;
                p2 += (er - 1.0 - r) / (r * r);
                f1 += (-4.0 - r + er * (4.0 - 3.0 * r + r * r)) / r3;
                f2 += (2.0 + r + er * (r - 2.0)) / r3;
                f3 += (-4.0 - 3.0 * r - r * r + er * (4.0 - r)) / r3;
            }
            out.q.push(q * (dt / n));
            out.q2.push(q2 * (dt / n));
            out.p1.push(p1 * (dt / n));
            out.p2.push(p2 * (dt / n));
            out.f1.push(f1 * (dt / n));
            out.f2.push(f2 * (dt / n));
            out.f3.push(f3 * (dt / n));
        }
        out
    }
}

/// Enforces `c_{-k} = conj(c_k)` exactly.
fn symmetrize(grid: &Grid, c: &mut [Complex64]) {
    c[0].im = 0.0;
    let half = grid.modes() / 2;
    c[half] = ZERO;
    for idx in 1..half {
        let mirror = grid.modes() - idx;
        let avg = 0.5 * (c[idx] + c[mirror].conj());
        c[idx] = avg;
        c[mirror] = avg.conj();
    }
}

/// Advances `state` by one step of `cfg`.
pub fn step(state: &RunState, cfg: &SolverConfig) -> Result<RunState> {
    let u0_sup = state.field.sup_norm();
    let stepper = Stepper::new(state.field.grid(), cfg, ceiling_for(u0_sup, cfg))?;
    let mut next = state.clone();
    stepper.step_in_place(&mut next)?;
    Ok(next)
}

fn ceiling_for(sup: f64, cfg: &SolverConfig) -> f64 {
    if sup > 0.0 {
        cfg.blowup_factor * sup
    } else {
        f64::INFINITY
    }
}

/// Output of [`evolve`].
#[derive(Clone, Debug)]
pub struct Run {
    pub trace: Trace,
    pub history: Vec<ConservedSample>,
    /// Time before the initial data's fastest radiation wraps around the box.
    pub wrap_horizon: f64,
    pub config: SolverConfig,
}

/// Drops modes the nonlinear stepper does not carry.
pub fn project_retained(u: &Field) -> Field {
    let grid = u.grid().clone();
    u.map_spectral(
        |idx, _| if grid.is_retained(idx) { Complex64::new(1.0, 0.0) } else { ZERO },
        u.is_real_valued(),
    )
}

/// Repeated [`Stepper`] steps from `u0` with a snapshot every
/// `snapshot_stride` steps (and at `t = 0`). Mass and energy are recorded
/// with every snapshot.
pub fn evolve(u0: &Field, cfg: &SolverConfig) -> Result<Run> {
    evolve_with(u0, cfg, |_, _| Ok(()))
}

/// [`evolve`] with a callback invoked on each snapshot.
pub fn evolve_with(
    u0: &Field,
    cfg: &SolverConfig,
    mut on_snapshot: impl FnMut(f64, &Field) -> Result<()>,
) -> Result<Run> {
    cfg.validate()?;
    let start = if cfg.nonlinearity { project_retained(u0) } else { u0.to_spectral() };
    if cfg.nonlinearity {
        let limit = cfg.cfl_limit(&start);
        if cfg.dt > limit {
            return Err(GkdvError::ConfigInvalid(format!(
                "dt = {} exceeds the nonlinear step bound {limit:.3e}",
                cfg.dt
            )));
        }
    }
    let stepper = Stepper::new(start.grid(), cfg, ceiling_for(start.sup_norm(), cfg))?;
    let mut state = RunState::new(&start);
    let mut record = |state: &mut RunState| -> Result<()> {
        let snap = state.field.to_physical();
        on_snapshot(state.time, &snap)?;
        state.history.push(ConservedSample::measure(state.time, &snap, cfg.power));
        let t = state.time;
        state.trace.push(t, snap)
    };
    record(&mut state)?;
    let n = cfg.step_count();
    for i in 1..=n {
        stepper.step_in_place(&mut state)?;
        if i % cfg.snapshot_stride as u64 == 0 {
            record(&mut state)?;
        }
    }
    Ok(Run { trace: state.trace, history: state.history, wrap_horizon: wrap_horizon(u0), config: cfg.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{airy_propagate, relative_drift};

    fn bump(g: &Grid) -> Field {
        Field::from_fn(g, |x| 0.3 * (-(x - 1.0) * (x - 1.0) / 2.0).exp())
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = Grid::new(20.0, 64).unwrap();
        let cfg = SolverConfig { dt: 0.01, t_end: 0.5, snapshot_stride: 10, ..Default::default() };
        let run = evolve(&Field::zeros(&g), &cfg).unwrap();
        assert!(run.trace.fields().iter().all(|f| f.sup_norm() == 0.0));
    }

    #[test]
    fn linear_step_is_exact() {
        let g = Grid::new(20.0, 64).unwrap();
        let u0 = bump(&g);
        for scheme in ALL_SCHEMES {
            let cfg = SolverConfig { dt: 0.05, nonlinearity: false, scheme, ..Default::default() };
            let next = step(&RunState::new(&u0), &cfg).unwrap();
            assert!(next.field.max_abs_diff(&airy_propagate(&u0, 0.05)) < 1e-12);
        }
    }

    const ALL_SCHEMES: [TimeScheme; 4] = [
        TimeScheme::IntegratingFactorGauss4,
        TimeScheme::IntegratingFactorRk4,
        TimeScheme::Etdrk4,
        TimeScheme::Krogstad,
    ];

    #[test]
    fn schemes_agree_on_short_run() {
        let g = Grid::new(20.0, 128).unwrap();
        let u0 = bump(&g);
        let runs: Vec<Field> = ALL_SCHEMES
            .iter()
            .map(|&scheme| {
                let cfg = SolverConfig { dt: 1e-3, t_end: 0.5, snapshot_stride: 500, scheme, ..Default::default() };
                evolve(&u0, &cfg).unwrap().trace.last().unwrap().1.clone()
            })
            .collect();
        for r in &runs[1..] {
            assert!(r.max_abs_diff(&runs[0]) < 1e-9);
        }
    }

    #[test]
    fn gauss_conserves_mass() {
        let g = Grid::new(30.0, 128).unwrap();
        let u0 = Field::from_fn(&g, |x| 1.2 * (-x * x / 3.0).exp() * (1.0 + 0.3 * x.sin()));
        let cfg = SolverConfig { dt: 2e-3, t_end: 2.0, snapshot_stride: 100, ..Default::default() };
        let run = evolve(&u0, &cfg).unwrap();
        assert!(relative_drift(&run.history).0 < 1e-12);
    }

    #[test]
    fn snapshot_count() {
        let g = Grid::new(20.0, 64).unwrap();
        let cfg = SolverConfig { dt: 0.01, t_end: 1.0, snapshot_stride: 7, ..Default::default() };
        let run = evolve(&bump(&g), &cfg).unwrap();
        assert_eq!(run.trace.len(), 100 / 7 + 1);
        assert_eq!(run.history.len(), run.trace.len());
    }

    #[test]
    fn cfl_violation_is_config_error() {
        let g = Grid::new(20.0, 256).unwrap();
        let big = Field::from_fn(&g, |x| 5.0 * (-x * x).exp());
        let cfg = SolverConfig { dt: 0.1, t_end: 1.0, ..Default::default() };
        assert!(matches!(evolve(&big, &cfg), Err(GkdvError::ConfigInvalid(_))));
    }

    #[test]
    fn blowup_ceiling_trips() {
        let g = Grid::new(20.0, 64).unwrap();
        let u0 = bump(&g);
        let cfg = SolverConfig { dt: 0.01, blowup_factor: 1.0 + 1e-15, ..Default::default() };
        let stepper = Stepper::new(&g, &cfg, 1e-3).unwrap();
        let mut state = RunState::new(&u0);
        assert!(matches!(stepper.step_in_place(&mut state), Err(GkdvError::BlowupDetected { .. })));
    }

    #[test]
    fn real_data_stays_real() {
        let g = Grid::new(20.0, 64).unwrap();
        let cfg = SolverConfig { dt: 0.01, t_end: 0.2, snapshot_stride: 20, ..Default::default() };
        let run = evolve(&bump(&g), &cfg).unwrap();
        let (_, last) = run.trace.last().unwrap();
        assert!(last.is_real_valued());
        assert!(last.conjugate_symmetry_defect() < 1e-12);
    }
}
