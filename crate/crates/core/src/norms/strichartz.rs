use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sobolev_norm, spacetime_norm};
use crate::error::{GkdvError, Result};
use crate::solver::airy_propagate;
use crate::spectral::{Field, Grid, Trace};

/// Numerator, denominator and ratio of one empirical estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateSample {
    pub functional: String,
    pub input: String,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
}

impl EstimateSample {
    pub fn new(functional: impl Into<String>, input: impl Into<String>, numerator: f64, denominator: f64) -> Result<Self> {
        if !(denominator > 0.0) {
            return Err(GkdvError::InvalidArgument(format!("estimate denominator must be positive, got {denominator}")));
        }
        Ok(EstimateSample {
            functional: functional.into(),
            input: input.into(),
            numerator,
            denominator,
            ratio: numerator / denominator,
        })
    }
}

/// Space-time norm of the free wave against a norm of its data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrichartzPair {
    /// `L⁴_t L^∞_x` against `Ḣ^{-1/4}`.
    L4tLinfx,
    /// `L⁶_{t,x}` against `Ḣ^{-1/6}`.
    L6tx,
    /// `L^∞_t L²_x` against `L²`.
    LinftL2x,
    /// `L⁸_{t,x}` against `L²`.
    L8tx,
    /// `L⁶_t L^∞_x` against `L²`.
    L6tLinfx,
}

impl StrichartzPair {
    pub const ALL: [StrichartzPair; 5] = [Self::L4tLinfx, Self::L6tx, Self::LinftL2x, Self::L8tx, Self::L6tLinfx];

    /// `(q, r, s)`: the norm `L^q_t L^r_x` and data norm `Ḣ^s`.
    pub fn exponents(self) -> (f64, f64, f64) {
        let inf = f64::INFINITY;
        match self {
            Self::L4tLinfx => (4.0, inf, -0.25),
            Self::L6tx => (6.0, 6.0, -1.0 / 6.0),
            Self::LinftL2x => (inf, 2.0, 0.0),
            Self::L8tx => (8.0, 8.0, 0.0),
            Self::L6tLinfx => (6.0, inf, 0.0),
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Self::L4tLinfx => "l4t_linfx",
            Self::L6tx => "l6tx",
            Self::LinftL2x => "linft_l2x",
            Self::L8tx => "l8tx",
            Self::L6tLinfx => "l6t_linfx",
        }
    }
}

/// Random zero-mean band-limited data: `Σ a_n cos(ξ_n x) + b_n sin(ξ_n x)`
/// over the modes with `band.0 ≤ ξ_n ≤ band.1`, with `a_n, b_n` uniform in
/// `[-1, 1]`, evolved freely over `[0, window]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSpec {
    pub size: usize,
    pub seed: u64,
    pub box_length: f64,
    pub modes: usize,
    pub band: (f64, f64),
    pub window: f64,
    pub frames: usize,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec { size: 200, seed: 0, box_length: 50.0, modes: 128, band: (0.5, 3.0), window: 1.0, frames: 65 }
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<Grid> {
        if !(self.band.0 > 0.0 && self.band.1 > self.band.0) {
            return Err(GkdvError::ConfigInvalid(format!("bad frequency band {:?}", self.band)));
        }
        if !(self.window > 0.0) || self.frames < 2 {
            return Err(GkdvError::ConfigInvalid("need a positive window and at least two frames".into()));
        }
        let g = Grid::new(self.box_length, self.modes)?;
        if self.band.1 > g.max_wavenumber() {
            return Err(GkdvError::ConfigInvalid(format!(
                "band edge {} above the largest resolved wavenumber {}",
                self.band.1,
                g.max_wavenumber()
            )));
        }
        Ok(g)
    }

    /// Data of sample `i`, drawn from its own stream of the seeded generator.
    pub fn sample(&self, grid: &Grid, i: usize) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        let dk = 2.0 * std::f64::consts::PI / grid.box_length();
        let lo = (self.band.0 / dk).ceil() as i64;
        let hi = (self.band.1 / dk).floor() as i64;
        let terms: Vec<(f64, f64, f64)> = (lo.max(1)..=hi)
            .map(|n| (n as f64 * dk, rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
            .collect();
        Field::from_fn(grid, |x| terms.iter().map(|&(xi, a, b)| a * (xi * x).cos() + b * (xi * x).sin()).sum())
    }
}

/// Ratios of every [`StrichartzPair`] for each ensemble member, in sample
/// order. Samples are evaluated in parallel.
pub fn strichartz_constant_sampler(spec: &EnsembleSpec) -> Result<Vec<EstimateSample>> {
    let grid = spec.validate()?;
    let times: Vec<f64> = (0..spec.frames).map(|j| spec.window * j as f64 / (spec.frames - 1) as f64).collect();
    let per_sample: Vec<Result<Vec<EstimateSample>>> = (0..spec.size)
        .into_par_iter()
        .map(|i| {
            let u0 = spec.sample(&grid, i);
            let tr = Trace::sample(times.clone(), |t| airy_propagate(&u0, t))?;
            StrichartzPair::ALL
                .iter()
                .map(|&pair| {
                    let (q, r, s) = pair.exponents();
                    let num = spacetime_norm(&tr, q, r, (0.0, spec.window))?;
                    let den = sobolev_norm(&u0, s, true)?;
                    EstimateSample::new(pair.id(), format!("sample {i}"), num, den)
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(spec.size * StrichartzPair::ALL.len());
    for s in per_sample {
        out.extend(s?);
    }
    Ok(out)
}
