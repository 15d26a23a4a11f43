use std::io::Write;

use super::manifest::RunManifest;
use crate::error::{GkdvError, Result};

/// Quantity ids understood by [`emit_plot_data`].
pub const PLOT_QUANTITIES: [&str; 8] = [
    "lambda_path",
    "center_path",
    "cauchy_distances",
    "xsb_shells",
    "conserved",
    "kato_residual",
    "estimates",
    "scaling",
];

/// Writes `quantity` from `manifest` as CSV with a header row.
///
/// Fails with `UnknownQuantity` for an unknown id and for one the manifest
/// does not hold (a soliton run has no modulation path, for instance).
pub fn emit_plot_data(manifest: &RunManifest, quantity: &str, w: impl Write) -> Result<()> {
    let missing = || GkdvError::UnknownQuantity(format!("{quantity} (not present in this manifest)"));
    let mut out = csv::Writer::from_writer(w);
    let row = |out: &mut csv::Writer<_>, vals: &[String]| out.write_record(vals);
    match quantity {
        "lambda_path" | "center_path" => {
            let p = manifest.modulation_path.as_ref().ok_or_else(missing)?;
            let (name, vals) = if quantity == "lambda_path" { ("lambda", &p.lambda) } else { ("x", &p.center) };
            row(&mut out, &["t".into(), name.into()])?;
            for (t, v) in p.times.iter().zip(vals) {
                row(&mut out, &[t.to_string(), v.to_string()])?;
            }
        }
        "cauchy_distances" => {
            let s = manifest.scatter.as_ref().ok_or_else(missing)?;
            row(&mut out, &["checkpoint".into(), "H1_dist".into(), "Hneg16_dist".into()])?;
            for k in 0..s.h1_dist.len() {
                row(&mut out, &[s.checkpoints[k + 1].to_string(), s.h1_dist[k].to_string(), s.hneg16_dist[k].to_string()])?;
            }
        }
        "xsb_shells" => {
            let p = manifest.xsb.as_ref().ok_or_else(missing)?;
            row(&mut out, &["k".into(), "mass".into()])?;
            for (k, m) in p.k.iter().zip(&p.mass) {
                row(&mut out, &[k.to_string(), m.to_string()])?;
            }
        }
        "conserved" => {
            if manifest.conserved.is_empty() {
                return Err(missing());
            }
            row(&mut out, &["t".into(), "mass".into(), "energy".into()])?;
            for s in &manifest.conserved {
                row(&mut out, &[s.t.to_string(), s.mass.to_string(), s.energy.to_string()])?;
            }
        }
        "kato_residual" => {
            let k = manifest.kato.as_ref().ok_or_else(missing)?;
            row(&mut out, &["t".into(), "residual".into()])?;
            for (t, r) in k.residual_times.iter().zip(&k.residual) {
                row(&mut out, &[t.to_string(), r.to_string()])?;
            }
        }
        "estimates" => {
            if manifest.estimates.is_empty() {
                return Err(missing());
            }
            row(&mut out, &["functional".into(), "min".into(), "max".into(), "mean".into()])?;
            for e in &manifest.estimates {
                row(&mut out, &[e.functional.clone(), e.min.to_string(), e.max.to_string(), e.mean.to_string()])?;
            }
        }
        "scaling" => {
            if manifest.scaling.is_empty() {
                return Err(missing());
            }
            row(&mut out, &["quantity".into(), "exponent".into(), "prefactor".into(), "residual".into()])?;
            for f in &manifest.scaling {
                row(&mut out, &[f.quantity.clone(), f.exponent.to_string(), f.prefactor.to_string(), f.residual.to_string()])?;
            }
        }
        other => return Err(GkdvError::UnknownQuantity(other.to_string())),
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::ModulationPath;
    use crate::soliton::SolitonParams;

    #[test]
    fn lambda_path_csv() {
        let t = vec![0.0, 0.5];
        let p = [SolitonParams::new(1.0, 0.0), SolitonParams::new(1.25, 0.5)];
        let m = RunManifest { modulation_path: Some(ModulationPath::from_samples(t, &p, vec![0.0; 2])), ..Default::default() };
        let mut buf = Vec::new();
        emit_plot_data(&m, "lambda_path", &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,lambda\n0,1\n0.5,1.25\n");
    }

    #[test]
    fn unknown_and_absent_quantities() {
        let m = RunManifest::default();
        assert!(matches!(emit_plot_data(&m, "nope", Vec::new()), Err(GkdvError::UnknownQuantity(_))));
        for q in PLOT_QUANTITIES {
            assert!(matches!(emit_plot_data(&m, q, Vec::new()), Err(GkdvError::UnknownQuantity(_))), "{q}");
        }
    }
}
