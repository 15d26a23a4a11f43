use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Scenario};
use crate::error::Result;
use crate::modulation::{ModulationDiagnostics, ModulationPath};
use crate::norms::{KatoMonitor, NormReport, ShellProfile};
use crate::report::Report;
use crate::scattering::ScatterDiagnostics;
use crate::solver::ConservedSample;

/// Bumped whenever the manifest layout changes.
pub const MANIFEST_FORMAT: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub package: String,
    pub manifest_format: u32,
}

impl Default for Versions {
    fn default() -> Self {
        Versions { package: env!("CARGO_PKG_VERSION").to_string(), manifest_format: MANIFEST_FORMAT }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    /// The run stopped early; `failure` says where.
    Partial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: String,
    pub error: String,
    /// Simulation time of the failure, when known.
    pub time: Option<f64>,
}

/// Wall-clock data, kept apart so runs can be compared without it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix: f64,
    pub wall_seconds: f64,
    pub stages: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub mass: f64,
    pub energy: f64,
}

/// Per-functional summary of an estimate ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub functional: String,
    pub samples: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChildRun {
    pub epsilon: f64,
    pub directory: String,
    pub config_hash: String,
    pub status: RunStatus,
}

/// Least-squares fit `log q = log c + p log ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub quantity: String,
    pub epsilons: Vec<f64>,
    pub values: Vec<f64>,
    pub exponent: f64,
    pub prefactor: f64,
    /// Root-mean-square residual of the fit in `log q`.
    pub residual: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub scenario: Option<Scenario>,
    pub seed: u64,
    pub versions: Versions,
    pub status: Option<RunStatus>,
    pub failure: Option<Failure>,
    /// The canonical configuration (no output directory).
    pub config: Option<ExperimentConfig>,
    /// End of the window on which line-only diagnostics are trusted.
    pub trusted_horizon: Option<f64>,
    pub wrap_horizon: Option<f64>,
    pub conserved: Vec<ConservedSample>,
    pub drift: Option<Drift>,
    pub reports: Vec<Report>,
    pub norms: Vec<NormReport>,
    pub modulation: Option<ModulationDiagnostics>,
    pub modulation_path: Option<ModulationPath>,
    pub scatter: Option<ScatterDiagnostics>,
    pub xsb: Option<ShellProfile>,
    pub kato: Option<KatoMonitor>,
    pub estimates: Vec<RatioSummary>,
    pub children: Vec<ChildRun>,
    pub scaling: Vec<ScalingFit>,
    /// Output files, relative to the run directory.
    pub files: Vec<String>,
    pub timing: Timing,
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        RunManifest {
            config_hash: cfg.hash(),
            scenario: Some(cfg.scenario),
            seed: cfg.seed,
            config: Some(cfg.canonical()),
            ..Default::default()
        }
    }

    pub fn report(&self, title: &str) -> Option<&Report> {
        self.reports.iter().find(|r| r.title == title)
    }

    /// The manifest as JSON without the `timing` object.
    pub fn without_timing(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("manifest serialises");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        v
    }

    /// Writes `manifest.json` in `dir` through a temporary file and a rename.
    pub fn write_atomic(&self, dir: &Path) -> Result<()> {
        let tmp = dir.join(format!(".{MANIFEST_FILE}.tmp"));
        {
            let mut f = std::fs::File::create(&tmp)?;
            serde_json::to_writer_pretty(&mut f, self)?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, dir.join(MANIFEST_FILE))?;
        Ok(())
    }

    /// Reads a manifest file, or `manifest.json` inside a directory.
    pub fn load(path: &Path) -> Result<Self> {
        let path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
