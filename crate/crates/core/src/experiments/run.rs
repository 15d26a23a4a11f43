use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Scenario};
use super::manifest::{ChildRun, Drift, Failure, RatioSummary, RunManifest, RunStatus, ScalingFit};
use super::perturbation::perturbation;
use crate::error::{GkdvError, Result};
use crate::modulation::{decompose_trace_with, diagnostics, fit_with};
use crate::norms::{
    evaluate, kato_identity_monitor, kato_weighted_integral, strichartz_constant_sampler, xsb_shells, EstimateSample,
};
use crate::report::Report;
use crate::scattering::{checkpoints_ending_at, decoupling_check, pullback_state, scatter_diagnostics};
use crate::soliton::{scaled_soliton, soliton_field, soliton_identities, SolitonParams};
use crate::solver::{evolve_with, relative_drift, return_horizon, wrap_horizon, ConservedSample, Run};
use crate::spectral::snapshot::write_snapshot;
use crate::spectral::Field;

/// Sidecar index of the snapshot directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceIndex {
    pub config_hash: String,
    pub times: Vec<f64>,
    pub files: Vec<String>,
    pub conserved: Vec<ConservedSample>,
}

pub const TRACE_DIR: &str = "trace";

struct Runner {
    dir: PathBuf,
    manifest: RunManifest,
    clock: Instant,
}

impl Runner {
    fn new(cfg: &ExperimentConfig, dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut manifest = RunManifest::new(cfg);
        manifest.timing.started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        Ok(Runner { dir: dir.to_path_buf(), manifest, clock: Instant::now() })
    }

    /// Runs one stage, recording its wall time and, on error, the failure.
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let out = f(self);
        self.manifest.timing.stages.insert(name.to_string(), t0.elapsed().as_secs_f64());
        if let Err(e) = &out {
            if self.manifest.failure.is_none() {
                let time = match e {
                    GkdvError::BlowupDetected { time, .. } => Some(*time),
                    _ => None,
                };
                self.manifest.failure = Some(Failure { stage: name.to_string(), error: e.to_string(), time });
            }
        }
        out
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let f = File::create(self.dir.join(name))?;
        self.manifest.files.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        Ok(())
    }

    fn finish(mut self, outcome: Result<()>) -> Result<RunManifest> {
        self.manifest.status = Some(if outcome.is_ok() { RunStatus::Complete } else { RunStatus::Partial });
        self.manifest.timing.wall_seconds = self.clock.elapsed().as_secs_f64();
        self.manifest.write_atomic(&self.dir)?;
        outcome.map(|_| self.manifest)
    }
}

/// Runs the configured scenario in its resolved output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunManifest> {
    run_experiment_in(cfg, &cfg.resolve_output_dir(None))
}

/// Runs the configured scenario, writing every output inside `dir`.
///
/// The configuration is validated before anything is computed or created.
/// On failure the manifest is still written, with status `partial` and the
/// failing stage, and the error is returned.
pub fn run_experiment_in(cfg: &ExperimentConfig, dir: &Path) -> Result<RunManifest> {
    cfg.validate()?;
    let mut runner = Runner::new(cfg, dir)?;
    let outcome = match cfg.scenario {
        Scenario::Soliton => soliton_pipeline(cfg, &mut runner),
        Scenario::AiryEnsemble => ensemble_pipeline(cfg, &mut runner),
        Scenario::PerturbedSoliton => perturbed_pipeline(cfg, &mut runner),
        Scenario::Sweep => sweep_pipeline(cfg, &mut runner),
    };
    runner.finish(outcome)
}

/// Evolves `u0`, streaming every `trace_stride`-th snapshot to disk.
fn evolve_and_store(cfg: &ExperimentConfig, runner: &mut Runner, u0: &Field, solver: &crate::solver::SolverConfig) -> Result<Run> {
    let stride = cfg.trace_stride;
    let trace_dir = runner.dir.join(TRACE_DIR);
    if stride.is_some() {
        std::fs::create_dir_all(&trace_dir)?;
    }
    let mut count = 0usize;
    let mut stored: Vec<(f64, String)> = Vec::new();
    let result = runner.stage("evolve", |_| {
        evolve_with(u0, solver, |t, f| {
            if let Some(s) = stride {
                if count % s == 0 {
                    let name = format!("snap_{count:06}.bin");
                    write_snapshot(BufWriter::new(File::create(trace_dir.join(&name))?), f, t)?;
                    stored.push((t, format!("{TRACE_DIR}/{name}")));
                }
            }
            count += 1;
            Ok(())
        })
    });
    for (_, name) in &stored {
        runner.manifest.files.push(name.clone());
    }
    let run = result?;
    runner.manifest.conserved = run.history.clone();
    let (mass, energy) = relative_drift(&run.history);
    runner.manifest.drift = Some(Drift { mass, energy });
    runner.manifest.wrap_horizon = Some(run.wrap_horizon);
    if stride.is_some() {
        let index = TraceIndex {
            config_hash: runner.manifest.config_hash.clone(),
            times: stored.iter().map(|s| s.0).collect(),
            files: stored.iter().map(|s| s.1.clone()).collect(),
            conserved: run.history.clone(),
        };
        runner.write_json(&format!("{TRACE_DIR}/index.json"), &index)?;
    }
    Ok(run)
}

fn soliton_pipeline(cfg: &ExperimentConfig, runner: &mut Runner) -> Result<()> {
    let grid = cfg.grid.build()?;
    let u0 = scaled_soliton(&grid, &cfg.soliton)?;
    let ids = runner.stage("identities", |_| soliton_identities(&grid))?;
    runner.manifest.reports.push(ids);
    let run = evolve_and_store(cfg, runner, &u0, &cfg.solver)?;
    runner.stage("transport", |r| {
        let p = cfg.soliton;
        let speed = p.lambda.powi(-2);
        let mut max_err = 0.0f64;
        let mut final_err = 0.0;
        for (&t, u) in run.trace.times().iter().zip(run.trace.fields()) {
            let exact = soliton_field(&grid, &SolitonParams { center: p.center + speed * t, ..p });
            final_err = (u - &exact).l2_norm() / exact.l2_norm();
            max_err = max_err.max(final_err);
        }
        let drift = r.manifest.drift.clone().expect("set by evolve");
        let mut rep = Report::new("transport");
        rep.push("final_relative_l2_error", final_err)
            .push("max_relative_l2_error", max_err)
            .push("mass_drift", drift.mass)
            .push("energy_drift", drift.energy)
            .push("wrap_horizon", run.wrap_horizon);
        r.manifest.reports.push(rep);
        Ok(())
    })
}

fn summarise(samples: &[EstimateSample]) -> Vec<RatioSummary> {
    let mut by: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for s in samples {
        by.entry(s.functional.as_str()).or_default().push(s.ratio);
    }
    by.into_iter()
        .map(|(k, v)| RatioSummary {
            functional: k.to_string(),
            samples: v.len(),
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: v.iter().sum::<f64>() / v.len() as f64,
        })
        .collect()
}

fn ensemble_pipeline(cfg: &ExperimentConfig, runner: &mut Runner) -> Result<()> {
    let samples = runner.stage("strichartz", |_| strichartz_constant_sampler(&cfg.ensemble.spec(cfg.seed)))?;
    let mut w = csv::Writer::from_writer(runner.create("estimates.csv")?);
    for s in &samples {
        w.serialize(s)?;
    }
    w.flush()?;
    runner.manifest.estimates = summarise(&samples);
    Ok(())
}

fn perturbed_pipeline(cfg: &ExperimentConfig, runner: &mut Runner) -> Result<()> {
    let grid = cfg.grid.build()?;
    let eps = cfg.perturbation.epsilon;
    let (u0, horizon, solver) = runner.stage("initial_data", |r| {
        let bump = perturbation(&grid, &cfg.perturbation, cfg.seed)?;
        let u0 = &scaled_soliton(&grid, &cfg.soliton)? + &bump;
        let fit0 = fit_with(&u0, &cfg.soliton, &cfg.fit)?;
        let w0 = &u0 - &soliton_field(&grid, &fit0.params);
        let horizon = return_horizon(&w0).min(cfg.solver.t_end);
        let mut solver = cfg.solver.clone();
        if cfg.stop_at_horizon {
            let frame = solver.dt * solver.snapshot_stride as f64;
            solver.t_end = ((horizon / frame).ceil() * frame).min(cfg.solver.t_end);
        }
        r.manifest.trusted_horizon = Some(horizon);
        let mut rep = Report::new("initial_data");
        rep.push("epsilon", eps)
            .push("initial_lambda", fit0.params.lambda)
            .push("initial_center", fit0.params.center)
            .push_note("return_horizon", horizon, "radiation returns to the soliton after this time")
            .push("wrap_horizon", wrap_horizon(&u0));
        r.manifest.reports.push(rep);
        Ok((u0, horizon, solver))
    })?;
    let run = evolve_and_store(cfg, runner, &u0, &solver)?;
    let trace = run.trace.restrict((0.0, horizon));
    let dec = runner.stage("decompose", |r| {
        let dec = decompose_trace_with(&trace, eps, Some(cfg.soliton), &cfg.fit)?;
        dec.path.write_csv(r.create("modulation_path.csv")?)?;
        let diag = diagnostics(&dec);
        let decay = kato_weighted_integral(&dec.w, &dec.path, 1.0, true)?;
        let mut rep = Report::new("weighted_decay");
        rep.push_note("weighted_decay", decay, "∫∫(w² + w_x²)e^{-|x - x(t)|} dx dt");
        if eps > 0.0 {
            rep.push("weighted_decay_over_eps2", decay / (eps * eps));
        }
        r.manifest.reports.push(rep);
        r.manifest.modulation = Some(diag);
        r.manifest.modulation_path = Some(dec.path.clone());
        Ok(dec)
    })?;
    runner.stage("norms", |r| {
        // the zero mode of w is box bookkeeping of the soliton mass; negative
        // orders need it removed, and every kind is evaluated the same way
        let radiation = dec.w.map(|_, w| w.mean_free());
        let reports = cfg.norms.iter().map(|n| evaluate(n, &radiation, Some(&dec.path))).collect::<Result<Vec<_>>>()?;
        r.write_json("norms.json", &reports)?;
        r.manifest.norms = reports;
        let span = dec.w.span().expect("non-empty");
        r.manifest.xsb = Some(xsb_shells(&dec.w, span)?);
        if let Some(scale) = cfg.kato_scale {
            r.manifest.kato = Some(kato_identity_monitor(&trace, &dec.path, scale, Some(cfg.solver.power))?);
        }
        Ok(())
    })?;
    runner.stage("scatter", |r| {
        let c = cfg.checkpoints;
        let cps = checkpoints_ending_at(c.end.unwrap_or(horizon), c.ratio, c.count);
        let s = scatter_diagnostics(&dec, &cps, horizon)?;
        s.write_distances_csv(r.create("cauchy_distances.csv")?)?;
        r.write_json("scatter.json", &s)?;
        let t_last = *s.checkpoints.last().expect("at least three checkpoints");
        let i = dec.path.index_of(t_last).expect("checkpoints are frame times");
        let w_plus = pullback_state(&dec.w.fields()[i], t_last);
        let q_mass = soliton_identities(&grid)?
            .get("mass")
            .ok_or_else(|| GkdvError::InvalidArgument("soliton identities lack the mass".into()))?;
        let soliton = dec.soliton(i);
        let mut rep = decoupling_check(&u0, dec.path.lambda[i], &w_plus, q_mass, Some((&soliton, &dec.w.fields()[i])));
        rep.push("checkpoint", t_last);
        r.manifest.reports.push(rep);
        r.manifest.scatter = Some(s);
        Ok(())
    })
}

/// `log q = log c + p log ε` by least squares; `None` below two positive
/// values.
pub fn fit_scaling(quantity: &str, epsilons: &[f64], values: &[f64]) -> Option<ScalingFit> {
    let pts: Vec<(f64, f64)> =
        epsilons.iter().zip(values).filter(|(e, v)| **e > 0.0 && **v > 0.0).map(|(e, v)| (e.ln(), v.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Some(ScalingFit {
        quantity: quantity.to_string(),
        epsilons: epsilons.to_vec(),
        values: values.to_vec(),
        exponent: slope,
        prefactor: intercept.exp(),
        residual,
    })
}

/// Scalars compared across the children of a sweep.
fn scaled_quantities(m: &RunManifest) -> Vec<(&'static str, f64)> {
    let mut out = Vec::new();
    if let Some(d) = &m.modulation {
        out.push(("sup_w_h1", d.sup_w_h1));
        out.push(("forcing_integral", d.forcing_integral));
    }
    if let Some(v) = m.report("weighted_decay").and_then(|r| r.get("weighted_decay")) {
        out.push(("weighted_decay", v));
    }
    if let Some(s) = &m.scatter {
        out.push(("first_cauchy_distance", s.total_dist()[0]));
        out.push(("duhamel_gap", s.duhamel_gap));
    }
    if let Some(r) = m.report("decoupling") {
        for (k, name) in [
            ("mass_residual", "abs_mass_residual"),
            ("energy_residual", "abs_energy_residual"),
            ("energy_residual_net", "abs_energy_residual_net"),
            ("mass_overlap", "abs_mass_overlap"),
            ("mass_residual_net", "abs_mass_residual_net"),
        ] {
            if let Some(v) = r.get(k) {
                out.push((name, v.abs()));
            }
        }
    }
    out
}

fn child_dir_name(eps: f64) -> String {
    format!("eps_{eps}")
}

fn sweep_pipeline(cfg: &ExperimentConfig, runner: &mut Runner) -> Result<()> {
    let dir = runner.dir.clone();
    let children: Vec<(f64, ExperimentConfig, PathBuf)> = cfg
        .sweep
        .epsilons
        .iter()
        .map(|&eps| {
            let mut c = cfg.clone();
            c.scenario = Scenario::PerturbedSoliton;
            c.perturbation.epsilon = eps;
            c.output_dir = None;
            (eps, c, dir.join(child_dir_name(eps)))
        })
        .collect();
    let results: Vec<Result<RunManifest>> = runner.stage("children", |_| {
        let go = |(_, c, d): &(f64, ExperimentConfig, PathBuf)| run_experiment_in(c, d);
        Ok(if cfg.sweep.parallel { children.par_iter().map(go).collect() } else { children.iter().map(go).collect() })
    })?;
    let mut first_err = None;
    let mut manifests = Vec::new();
    for ((eps, c, _), res) in children.iter().zip(results) {
        let status = if res.is_ok() { RunStatus::Complete } else { RunStatus::Partial };
        runner.manifest.children.push(ChildRun {
            epsilon: *eps,
            directory: child_dir_name(*eps),
            config_hash: c.hash(),
            status,
        });
        match res {
            Ok(m) => manifests.push((*eps, m)),
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    if let Some(e) = first_err {
        runner.manifest.failure = Some(Failure { stage: "children".into(), error: e.to_string(), time: None });
        return Err(e);
    }
    runner.stage("aggregate", |r| {
        let eps: Vec<f64> = manifests.iter().map(|m| m.0).collect();
        let per: Vec<Vec<(&str, f64)>> = manifests.iter().map(|m| scaled_quantities(&m.1)).collect();
        for (j, &(name, _)) in per[0].iter().enumerate() {
            let vals: Vec<f64> = per.iter().map(|p| p[j].1).collect();
            if let Some(fit) = fit_scaling(name, &eps, &vals) {
                r.manifest.scaling.push(fit);
            }
        }
        r.manifest.trusted_horizon =
            manifests.iter().filter_map(|m| m.1.trusted_horizon).reduce(f64::min);
        let scaling = r.manifest.scaling.clone();
        r.write_json("scaling.json", &scaling)
    })
}
