use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gkdv::experiments::{
    emit_plot_data, run_experiment_in, tally, verify_suite, ExperimentConfig, RunManifest, Scenario, VerifyLevel,
    VerifyOptions,
};
use gkdv::soliton::soliton_identities;
use gkdv::{GkdvError, Report, Result};

/// Pseudo-spectral experiments for the quartic generalised KdV equation
/// u_t + u_xxx + (u^4)_x = 0 on a periodic box.
///
/// Exit status: 0 on success, 1 on invalid input, 2 on a runtime failure
/// (including failed verification criteria).
#[derive(Parser, Debug)]
#[command(name = "gkdv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment configuration (JSON). Defaults to the preset of the command.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides the config and the GKDV_OUT_DIR variable.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the scenario named in the config (soliton transport by default).
    Simulate(Common),
    /// Check the soliton ODE and its integral identities on the config grid.
    SolitonCheck(Common),
    /// Sample empirical Strichartz constants over a free-wave ensemble.
    Norms(Common),
    /// Perturbed soliton: modulation, norms, scattering and decoupling.
    Scatter(Common),
    /// Perturbed-soliton runs over several ε plus a scaling report.
    Sweep(Common),
    /// Run the acceptance checks and print one line per criterion.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Level::Quick)]
        level: Level,
        /// Fault injection: use an unpadded grid in the product check.
        #[arg(long, hide = true)]
        break_dealiasing: bool,
    },
    /// Write one quantity of a finished run as CSV.
    EmitPlotData {
        #[command(flatten)]
        common: Common,
        /// Manifest file or run directory; defaults to the config's output directory.
        #[arg(long, value_name = "PATH")]
        manifest: Option<PathBuf>,
        /// lambda_path, center_path, cauchy_distances, xsb_shells, conserved,
        /// kato_residual, estimates or scaling.
        #[arg(long)]
        quantity: String,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Level {
    Quick,
    Full,
}

fn load(common: &Common, preset: Scenario, force: Option<Scenario>) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::preset(preset),
    };
    if let Some(s) = force {
        cfg.scenario = s;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn print_report(r: &Report) {
    println!("[{}]", r.title);
    for e in &r.entries {
        match &e.note {
            Some(n) => println!("  {:<34} {:>14.6e}  {n}", e.name, e.value),
            None => println!("  {:<34} {:>14.6e}", e.name, e.value),
        }
    }
}

fn run_and_summarise(cfg: &ExperimentConfig, common: &Common) -> Result<()> {
    let dir = cfg.resolve_output_dir(common.out.as_deref());
    eprintln!("{} run {} -> {}", cfg.scenario.id(), &cfg.hash()[..12], dir.display());
    let m = run_experiment_in(cfg, &dir)?;
    for r in &m.reports {
        print_report(r);
    }
    if let Some(d) = &m.drift {
        println!("drift: mass {:.3e}, energy {:.3e}", d.mass, d.energy);
    }
    if let Some(s) = &m.scatter {
        println!("checkpoints {:?}", s.checkpoints);
        println!("cauchy distances {:?}", s.total_dist());
        println!("decrease ratio {:.3}, duhamel gap {:.3e} (budget {:.3e})", s.decrease_ratio, s.duhamel_gap, s.duhamel_budget);
    }
    for e in &m.estimates {
        println!("{:<12} min {:.4} max {:.4} mean {:.4}", e.functional, e.min, e.max, e.mean);
    }
    for f in &m.scaling {
        println!("{:<22} exponent {:.3} (residual {:.2e})", f.quantity, f.exponent, f.residual);
    }
    println!("manifest: {}", dir.join(gkdv::experiments::MANIFEST_FILE).display());
    Ok(())
}

fn soliton_check(common: &Common) -> Result<()> {
    let grid = match &common.config {
        Some(p) => ExperimentConfig::load(p)?.grid.build()?,
        None => gkdv::spectral::Grid::new(60.0, 4096)?,
    };
    let r = soliton_identities(&grid)?;
    print_report(&r);
    if let Some(dir) = &common.out {
        std::fs::create_dir_all(dir)?;
        let f = std::fs::File::create(dir.join("soliton_identities.json"))?;
        serde_json::to_writer_pretty(f, &r)?;
    }
    Ok(())
}

fn verify(common: &Common, level: Level, break_dealiasing: bool) -> Result<bool> {
    let level = match level {
        Level::Quick => VerifyLevel::Quick,
        Level::Full => VerifyLevel::Full,
    };
    let opts = VerifyOptions { break_dealiasing, scratch: common.out.clone() };
    let r = verify_suite(level, &opts);
    for e in &r.entries {
        println!("{:<20} {}", e.name, e.note.as_deref().unwrap_or(""));
    }
    let (pass, total) = tally(&r);
    println!("{pass}/{total} criteria passed");
    if let Some(dir) = &common.out {
        std::fs::create_dir_all(dir)?;
        serde_json::to_writer_pretty(std::fs::File::create(dir.join("verify.json"))?, &r)?;
    }
    Ok(pass == total)
}

fn emit(common: &Common, manifest: Option<&Path>, quantity: &str) -> Result<()> {
    let path = match manifest {
        Some(p) => p.to_path_buf(),
        None => {
            let cfg = load(common, Scenario::PerturbedSoliton, None)?;
            cfg.resolve_output_dir(None)
        }
    };
    let m = RunManifest::load(&path).map_err(|e| match e {
        GkdvError::Io(io) => GkdvError::ConfigInvalid(format!("cannot read manifest {}: {io}", path.display())),
        other => other,
    })?;
    match &common.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let file = dir.join(format!("{quantity}.csv"));
            emit_plot_data(&m, quantity, std::io::BufWriter::new(std::fs::File::create(&file)?))?;
            eprintln!("wrote {}", file.display());
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            emit_plot_data(&m, quantity, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Simulate(c) => load(c, Scenario::Soliton, None).and_then(|cfg| run_and_summarise(&cfg, c)),
        Command::SolitonCheck(c) => soliton_check(c),
        Command::Norms(c) => {
            load(c, Scenario::AiryEnsemble, Some(Scenario::AiryEnsemble)).and_then(|cfg| run_and_summarise(&cfg, c))
        }
        Command::Scatter(c) => load(c, Scenario::PerturbedSoliton, Some(Scenario::PerturbedSoliton))
            .and_then(|cfg| run_and_summarise(&cfg, c)),
        Command::Sweep(c) => load(c, Scenario::Sweep, Some(Scenario::Sweep)).and_then(|cfg| run_and_summarise(&cfg, c)),
        Command::Verify { common, level, break_dealiasing } => match verify(common, *level, *break_dealiasing) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(2),
            Err(e) => Err(e),
        },
        Command::EmitPlotData { common, manifest, quantity } => emit(common, manifest.as_deref(), quantity),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
