//! Norms and multilinear functionals on fields and traces over explicit,
//! finite time windows.

mod kato;
mod multilinear;
mod strichartz;
mod xsb;

use serde::{Deserialize, Serialize};

use crate::error::{GkdvError, Result};
use crate::modulation::ModulationPath;
use crate::spectral::{ensure_mean_free, Field, Trace};

pub use kato::{kato_identity_monitor, kato_weighted_integral, tanh_weight_mass, KatoMonitor};
pub use multilinear::{bilinear_functional, quartilinear_functional, quartilinear_ratio};
pub use strichartz::{strichartz_constant_sampler, EnsembleSpec, EstimateSample, StrichartzPair};
pub use xsb::{taper, xsb_norm, xsb_shells, ShellProfile, MIN_XSB_FRAMES, TAPER_RAMP};

/// `‖|∇|^s f‖_{L²}` or `‖⟨∇⟩^s f‖_{L²}`.
pub fn sobolev_norm(f: &Field, s: f64, homogeneous: bool) -> Result<f64> {
    if homogeneous && s < 0.0 {
        ensure_mean_free(f)?;
    }
    let grid = f.grid();
    let coeffs = f.spectral();
    let sum: f64 = coeffs
        .iter()
        .zip(grid.abs_wavenumbers())
        .map(|(c, &a)| {
            let w = if homogeneous {
                if a == 0.0 {
                    if s == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    a.powf(2.0 * s)
                }
            } else {
                (1.0 + a * a).powf(s)
            };
            w * c.norm_sqr()
        })
        .sum();
    Ok((sum * grid.box_length()).sqrt())
}

/// `‖f‖_{L^r}` by the periodic trapezoid rule; `r = ∞` gives the grid max.
pub fn lebesgue_norm(f: &Field, r: f64) -> f64 {
    let vals = f.physical();
    if r.is_infinite() {
        return vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    let h = f.grid().spacing();
    let sum: f64 = vals.iter().map(|v| v.norm().powf(r)).sum();
    (sum * h).powf(1.0 / r)
}

/// `(∫ |g(t)|^q dt)^{1/q}` by the trapezoid rule, or `max |g|` for `q = ∞`.
pub(crate) fn time_norm(times: &[f64], g: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return g.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let p: Vec<f64> = g.iter().map(|v| v.abs().powf(q)).collect();
    crate::modulation::trapezoid(times, &p).powf(1.0 / q)
}

pub(crate) fn uniform_window(tr: &Trace, window: (f64, f64)) -> Result<Trace> {
    let sub = tr.restrict(window);
    if sub.len() >= 2 && sub.uniform_dt().is_none() {
        return Err(GkdvError::InvalidArgument(format!(
            "frames in [{}, {}] are not uniformly spaced",
            window.0, window.1
        )));
    }
    if sub.is_empty() {
        return Err(GkdvError::InvalidArgument(format!("no frames in [{}, {}]", window.0, window.1)));
    }
    Ok(sub)
}

/// `‖u‖_{L^q_t L^r_x}` over `window`: spatial trapezoid per frame, then
/// temporal trapezoid over the frames.
pub fn spacetime_norm(tr: &Trace, q: f64, r: f64, window: (f64, f64)) -> Result<f64> {
    let sub = uniform_window(tr, window)?;
    let g: Vec<f64> = sub.fields().iter().map(|u| lebesgue_norm(u, r)).collect();
    Ok(time_norm(sub.times(), &g, q))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NormKind {
    /// `sup_t ‖|∇|^s u(t)‖_{L²}` over the window.
    SobolevHom { s: f64 },
    /// `sup_t ‖⟨∇⟩^s u(t)‖_{L²}` over the window.
    SobolevInhom { s: f64 },
    /// `‖u‖_{L^q_t L^r_x}`; `null` stands for `∞`.
    LebesgueSpacetime {
        #[serde(with = "extended")]
        q: f64,
        #[serde(with = "extended")]
        r: f64,
    },
    Xsb {
        b: f64,
        #[serde(with = "extended")]
        q_dyadic: f64,
    },
    /// `∫∫ (u² + u_x²) e^{-σ|x - x(t)|}` along a modulation path.
    WeightedKato { sigma: f64 },
}

/// Serde for exponents in `[1, ∞]`, writing `∞` as `null`.
mod extended {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_none()
        } else {
            s.serialize_some(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl NormKind {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(GkdvError::ConfigInvalid(m));
        match *self {
            NormKind::SobolevHom { s } | NormKind::SobolevInhom { s } if !s.is_finite() => {
                bad(format!("Sobolev order must be finite, got {s}"))
            }
            NormKind::LebesgueSpacetime { q, r } if !(q >= 1.0 && r >= 1.0) => {
                bad(format!("Lebesgue exponents must lie in [1, ∞], got q = {q}, r = {r}"))
            }
            NormKind::Xsb { b, q_dyadic } if !(b.is_finite() && q_dyadic >= 1.0) => {
                bad(format!("need finite b and q_dyadic in [1, ∞], got b = {b}, q = {q_dyadic}"))
            }
            NormKind::WeightedKato { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                bad(format!("Kato weight rate must be positive, got {sigma}"))
            }
            _ => Ok(()),
        }
    }
}

/// Unknown keys are rejected by the flattened [`NormKind`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    #[serde(flatten)]
    pub kind: NormKind,
    /// Time interval; the whole trace when absent.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub box_length: f64,
    pub modes: usize,
}

/// One evaluated norm, as written to JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub kind: String,
    pub params: serde_json::Value,
    pub window: (f64, f64),
    pub value: f64,
    pub grid: GridInfo,
    /// Ratio between consecutive dyadic shells, where the norm has any.
    pub base: Option<f64>,
}

/// Evaluates `spec` on `tr`. The weighted Kato kind needs `path`.
pub fn evaluate(spec: &NormSpec, tr: &Trace, path: Option<&ModulationPath>) -> Result<NormReport> {
    spec.kind.validate()?;
    let span = tr.span().ok_or_else(|| GkdvError::InvalidArgument("empty trace".into()))?;
    let window = spec.window.unwrap_or(span);
    if window.0 < span.0 - 1e-9 || window.1 > span.1 + 1e-9 || window.0 > window.1 {
        return Err(GkdvError::ConfigInvalid(format!(
            "window [{}, {}] is not inside the trace span [{}, {}]",
            window.0, window.1, span.0, span.1
        )));
    }
    let grid = tr.grid().expect("non-empty trace");
    let mut base = None;
    let value = match spec.kind {
        NormKind::SobolevHom { s } | NormKind::SobolevInhom { s } => {
            let hom = matches!(spec.kind, NormKind::SobolevHom { .. });
            let sub = uniform_window(tr, window)?;
            let mut m = 0.0f64;
            for u in sub.fields() {
                m = m.max(sobolev_norm(u, s, hom)?);
            }
            m
        }
        NormKind::LebesgueSpacetime { q, r } => spacetime_norm(tr, q, r, window)?,
        NormKind::Xsb { b, q_dyadic } => {
            base = Some(2.0);
            xsb_norm(tr, b, q_dyadic, window)?
        }
        NormKind::WeightedKato { sigma } => {
            let path = path.ok_or_else(|| {
                GkdvError::ConfigInvalid("the weighted Kato integral needs a modulation path".into())
            })?;
            kato_weighted_integral(&tr.restrict(window), path, sigma, true)?
        }
    };
    let tagged = serde_json::to_value(spec.kind)?;
    let kind = tagged["kind"].as_str().unwrap_or_default().to_string();
    let mut params = tagged;
    if let Some(obj) = params.as_object_mut() {
        obj.remove("kind");
    }
    Ok(NormReport {
        kind,
        params,
        window,
        value,
        grid: GridInfo { box_length: grid.box_length(), modes: grid.modes() },
        base,
    })
}
