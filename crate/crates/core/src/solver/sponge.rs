use serde::{Deserialize, Serialize};

use crate::spectral::{Field, Grid};

/// Absorbing layer along both box edges.
///
/// The damping rate is `σ(x) = strength · S(z)` with `z = (width - d)/width`
/// clamped to `[0, 1]`, `d = L/2 - |x|` the distance to the nearest edge
/// and `S` the quintic smoothstep. `σ` vanishes identically more than
/// `width` away from the edges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sponge {
    pub width: f64,
    pub strength: f64,
}

impl Sponge {
    pub fn rate(&self, grid: &Grid, x: f64) -> f64 {
        if self.width <= 0.0 || self.strength == 0.0 {
            return 0.0;
        }
        let d = 0.5 * grid.box_length() - x.abs();
        let z = ((self.width - d) / self.width).clamp(0.0, 1.0);
        self.strength * z * z * z * (z * (6.0 * z - 15.0) + 10.0)
    }

    pub fn profile(&self, grid: &Grid) -> Vec<f64> {
        grid.points().iter().map(|&x| self.rate(grid, x)).collect()
    }
}

/// Multiplies `f` by `exp(-dt σ(x))`.
pub fn apply_sponge(f: &Field, sponge: &Sponge, dt: f64) -> Field {
    let grid = f.grid().clone();
    f.map_physical(|x, v| v * (-dt * sponge.rate(&grid, x)).exp(), f.is_real_valued())
}
