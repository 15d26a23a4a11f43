use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::perturbation::PerturbationSpec;
use crate::error::{GkdvError, Result};
use crate::modulation::FitOptions;
use crate::norms::{EnsembleSpec, NormKind, NormSpec};
use crate::soliton::{scaled_soliton, SolitonParams};
use crate::solver::SolverConfig;
use crate::spectral::Grid;

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "GKDV_OUT_DIR";

const SCHEMA: &str = include_str!("../../schema/experiment.schema.json");

/// The published JSON schema of [`ExperimentConfig`].
pub fn config_schema() -> &'static str {
    SCHEMA
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Soliton,
    AiryEnsemble,
    PerturbedSoliton,
    Sweep,
}

impl Scenario {
    pub fn id(self) -> &'static str {
        match self {
            Scenario::Soliton => "soliton",
            Scenario::AiryEnsemble => "airy_ensemble",
            Scenario::PerturbedSoliton => "perturbed_soliton",
            Scenario::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub box_length: f64,
    pub modes: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        if !(self.box_length.is_finite() && self.box_length > 0.0) {
            return Err(GkdvError::ConfigInvalid(format!("box length {} must be positive", self.box_length)));
        }
        if self.modes % 2 != 0 {
            return Err(GkdvError::ConfigInvalid(format!("mode count {} must be even", self.modes)));
        }
        Grid::new(self.box_length, self.modes)
    }
}

/// Geometric checkpoints `end·ratio^{-(count-1)}, …, end`; `end` defaults to
/// the trusted horizon of the run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckpointSpec {
    pub ratio: f64,
    pub count: usize,
    pub end: Option<f64>,
}

impl Default for CheckpointSpec {
    fn default() -> Self {
        CheckpointSpec { ratio: 1.5, count: 4, end: None }
    }
}

/// Free-wave ensemble; samples are drawn from the run seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub size: usize,
    pub box_length: f64,
    pub modes: usize,
    pub band: (f64, f64),
    pub window: f64,
    pub frames: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        let d = EnsembleSpec::default();
        EnsembleConfig {
            size: d.size,
            box_length: d.box_length,
            modes: d.modes,
            band: d.band,
            window: d.window,
            frames: d.frames,
        }
    }
}

impl EnsembleConfig {
    pub fn spec(&self, seed: u64) -> EnsembleSpec {
        EnsembleSpec {
            size: self.size,
            seed,
            box_length: self.box_length,
            modes: self.modes,
            band: self.band,
            window: self.window,
            frames: self.frames,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub epsilons: Vec<f64>,
    /// Run the children on the rayon pool instead of one after another.
    pub parallel: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec { epsilons: vec![0.005, 0.01, 0.02], parallel: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub grid: GridSpec,
    pub solver: SolverConfig,
    /// Initial soliton (also the fit's first guess).
    pub soliton: SolitonParams,
    pub perturbation: PerturbationSpec,
    pub fit: FitOptions,
    /// Norms of the radiation `w` (perturbed runs).
    pub norms: Vec<NormSpec>,
    pub checkpoints: CheckpointSpec,
    /// Cut the run at the trusted horizon instead of `solver.t_end`.
    pub stop_at_horizon: bool,
    /// Scale of the `tanh` weight in the local smoothing monitor; `None`
    /// skips the monitor.
    pub kato_scale: Option<f64>,
    pub ensemble: EnsembleConfig,
    pub sweep: SweepSpec,
    /// Keep every `trace_stride`-th snapshot on disk; `None` keeps none.
    pub trace_stride: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::preset(Scenario::PerturbedSoliton)
    }
}

impl ExperimentConfig {
    /// Standard configuration of each scenario.
    pub fn preset(scenario: Scenario) -> Self {
        let base = ExperimentConfig {
            scenario,
            grid: GridSpec { box_length: 1600.0, modes: 8192 },
            solver: SolverConfig { dt: 1e-3, t_end: 20.0, snapshot_stride: 50, ..Default::default() },
            soliton: SolitonParams::default(),
            perturbation: PerturbationSpec::default(),
            fit: FitOptions::default(),
            norms: vec![
                NormSpec { kind: NormKind::SobolevInhom { s: 1.0 }, window: None },
                NormSpec { kind: NormKind::SobolevHom { s: -1.0 / 6.0 }, window: None },
                NormSpec { kind: NormKind::LebesgueSpacetime { q: 6.0, r: 6.0 }, window: None },
                NormSpec { kind: NormKind::Xsb { b: 0.5, q_dyadic: 2.0 }, window: None },
                NormSpec { kind: NormKind::WeightedKato { sigma: 1.0 }, window: None },
            ],
            checkpoints: CheckpointSpec::default(),
            stop_at_horizon: true,
            kato_scale: Some(100.0),
            ensemble: EnsembleConfig::default(),
            sweep: SweepSpec::default(),
            trace_stride: Some(20),
            output_dir: None,
            seed: 7,
        };
        match scenario {
            Scenario::Soliton => ExperimentConfig {
                grid: GridSpec { box_length: 100.0, modes: 1024 },
                solver: SolverConfig { dt: 1e-3, t_end: 10.0, snapshot_stride: 500, ..Default::default() },
                norms: Vec::new(),
                stop_at_horizon: false,
                kato_scale: None,
                trace_stride: Some(1),
                ..base
            },
            Scenario::AiryEnsemble => ExperimentConfig { norms: Vec::new(), kato_scale: None, trace_stride: None, ..base },
            Scenario::PerturbedSoliton | Scenario::Sweep => base,
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(s).map_err(|e| GkdvError::ConfigInvalid(format!("config does not match the schema: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GkdvError::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Checks everything that can be checked without computing.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: GkdvError| match e {
            GkdvError::ConfigInvalid(_) => e,
            other => GkdvError::ConfigInvalid(other.to_string()),
        };
        match self.scenario {
            Scenario::AiryEnsemble => {
                self.ensemble.spec(self.seed).validate().map_err(cfg_err)?;
            }
            _ => {
                let grid = self.grid.build()?;
                self.solver.validate()?;
                scaled_soliton(&grid, &self.soliton).map_err(cfg_err)?;
                for n in &self.norms {
                    n.kind.validate()?;
                }
                self.perturbation.validate()?;
                if !(self.checkpoints.ratio > 1.0) || self.checkpoints.count < 3 {
                    return Err(GkdvError::ConfigInvalid(
                        "checkpoints need a ratio above 1 and at least three entries".into(),
                    ));
                }
                if let Some(end) = self.checkpoints.end {
                    if !(end > 0.0) {
                        return Err(GkdvError::ConfigInvalid(format!("checkpoint end {end} must be positive")));
                    }
                }
                if let Some(s) = self.kato_scale {
                    if !(s > 0.0 && s.is_finite()) {
                        return Err(GkdvError::ConfigInvalid(format!("kato_scale {s} must be positive")));
                    }
                }
                if self.trace_stride == Some(0) {
                    return Err(GkdvError::ConfigInvalid("trace_stride must be positive".into()));
                }
            }
        }
        if self.scenario == Scenario::Sweep {
            let e = &self.sweep.epsilons;
            if e.len() < 2 || e.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(GkdvError::ConfigInvalid("a sweep needs at least two positive epsilons".into()));
            }
        }
        Ok(())
    }

    /// The config as hashed and embedded in outputs: no output directory.
    pub fn canonical(&self) -> ExperimentConfig {
        ExperimentConfig { output_dir: None, ..self.clone() }
    }

    /// SHA-256 of the canonical JSON, in hex.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.canonical()).expect("config serialises");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `cli`, else the environment override, else the configured directory,
    /// else `runs/<hash prefix>`.
    pub fn resolve_output_dir(&self, cli: Option<&Path>) -> PathBuf {
        if let Some(p) = cli {
            return p.to_path_buf();
        }
        if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(p);
        }
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("runs").join(&self.hash()[..12]))
    }
}
