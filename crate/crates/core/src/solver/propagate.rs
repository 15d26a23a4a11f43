use num_complex::Complex64;

use crate::spectral::Field;

/// Exact Airy flow `e^{-t∂xxx}`: multiplies coefficient `k` by `exp(i t ξ_k³)`.
pub fn airy_propagate(u0: &Field, t: f64) -> Field {
    if t == 0.0 {
        return u0.clone();
    }
    u0.map_spectral(|_, xi| Complex64::from_polar(1.0, t * xi * xi * xi), u0.is_real_valued())
}

/// Group velocity `-3ξ²` of the Airy dispersion relation.
pub fn group_velocity(xi: f64) -> f64 {
    -3.0 * xi * xi
}

/// Fraction of L² mass the wrap-horizon cutoff frequency must enclose.
pub const WRAP_MASS_FRACTION: f64 = 1.0 - 1e-4;

/// Time before the fastest significant radiation in `f` reaches the box
/// edge: `L / (2 v_max)` with `v_max = 3 ξ_c²`, where `ξ_c` is the smallest
/// frequency enclosing [`WRAP_MASS_FRACTION`] of the L² mass of `f`. The
/// speed is floored at 1, the speed of the unit soliton.
pub fn wrap_horizon(f: &Field) -> f64 {
    let grid = f.grid();
    let coeffs = f.spectral();
    let mut modes: Vec<(f64, f64)> = coeffs
        .iter()
        .zip(grid.wavenumbers())
        .map(|(c, xi)| (xi.abs(), c.norm_sqr()))
        .collect();
    modes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = modes.iter().map(|m| m.1).sum();
    let mut acc = 0.0;
    let mut cutoff = 0.0;
    if total > 0.0 {
        for (xi, w) in modes {
            acc += w;
            cutoff = xi;
            if acc >= WRAP_MASS_FRACTION * total {
                break;
            }
        }
    }
    let v_max = (-group_velocity(cutoff)).max(1.0);
    grid.box_length() / (2.0 * v_max)
}

/// Fraction of the `H¹` mass of the radiation allowed above the cutoff
/// frequency in [`return_horizon`].
pub const RETURN_TAIL_FRACTION: f64 = 1e-3;

/// Time before radiation leaving a soliton of unit speed comes back around
/// the periodic box and reaches it again: `L / (v_c + 1)`, with `v_c = 3ξ_c²`
/// and `ξ_c` the smallest frequency above which `w` carries at most
/// [`RETURN_TAIL_FRACTION`] of its `H¹` mass.
pub fn return_horizon(w: &Field) -> f64 {
    let grid = w.grid();
    let coeffs = w.spectral();
    let mut modes: Vec<(f64, f64)> = coeffs
        .iter()
        .zip(grid.abs_wavenumbers())
        .map(|(c, &xi)| (xi, c.norm_sqr() * (1.0 + xi * xi)))
        .collect();
    modes.sort_by(|a, b| b.0.total_cmp(&a.0));
    let total: f64 = modes.iter().map(|m| m.1).sum();
    let mut tail = 0.0;
    let mut cutoff = 0.0;
    for (xi, m) in modes {
        tail += m;
        if tail > RETURN_TAIL_FRACTION * total {
            cutoff = xi;
            break;
        }
    }
    grid.box_length() / (-group_velocity(cutoff) + 1.0)
}
