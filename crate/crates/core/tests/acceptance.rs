//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each, and exits non-zero if any fails.
//!
//! Oracles are computed here, independently of the library: closed forms,
//! shooting and Simpson quadrature for the soliton, direct mode sums for
//! the Airy flow, brute-force convolution for the quartic product.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use gkdv::experiments::{run_experiment_in, ExperimentConfig, RunManifest, Scenario};
use gkdv::modulation::{fit_parameters, ModulationPath};
use gkdv::norms::{
    bilinear_functional, evaluate, kato_identity_monitor, spacetime_norm, strichartz_constant_sampler, xsb_shells,
    EnsembleSpec, NormKind, NormSpec,
};
use gkdv::scattering::decoupling_check;
use gkdv::soliton::{q_profile, soliton_identities, SolitonParams};
use gkdv::solver::{airy_propagate, energy, evolve, mass, SolverConfig};
use gkdv::spectral::{derivative, lp_low, lp_project, Field, Grid, LittlewoodPaley, Trace};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

// ---------------------------------------------------------------- oracles

/// `Q(y) = ((5/2) sech²(3y/2))^{1/3}`.
fn q_closed(y: f64) -> f64 {
    (2.5 / (1.5 * y).cosh().powi(2)).cbrt()
}

fn q_prime_closed(y: f64) -> f64 {
    -q_closed(y) * (1.5 * y).tanh()
}

/// Composite Simpson on `[-a, a]`.
fn simpson(f: impl Fn(f64) -> f64, a: f64, n: usize) -> f64 {
    let h = 2.0 * a / n as f64;
    let mut s = f(-a) + f(a);
    for i in 1..n {
        s += f(-a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `(∫Q², ∫Q'², ∫Q⁵)` by quadrature of the closed form.
fn soliton_integrals_oracle() -> (f64, f64, f64) {
    let n = 400_000;
    (
        simpson(|y| q_closed(y).powi(2), 40.0, n),
        simpson(|y| q_prime_closed(y).powi(2), 40.0, n),
        simpson(|y| q_closed(y).powi(5), 40.0, n),
    )
}

/// `λ^{-2/3} Q((x - c)/λ)` with the periodic displacement.
fn soliton_oracle(x: f64, lambda: f64, c: f64, box_length: f64) -> f64 {
    let d = (x - c + 0.5 * box_length).rem_euclid(box_length) - 0.5 * box_length;
    lambda.powf(-2.0 / 3.0) * q_closed(d / lambda)
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

// ---------------------------------------------------------------- criteria

fn c01_soliton_ode() -> Outcome {
    let t0 = Instant::now();
    let g = Grid::new(60.0, 4096).map_err(|e| e.to_string())?;
    let qf = q_profile(&g).map_err(|e| e.to_string())?;
    let closed = g.points().iter().map(|&x| q_closed(x)).zip(qf.real_values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let qv = qf.real_values();
    let qxx = derivative(&qf, 2).real_values();
    let res = qv.iter().zip(&qxx).map(|(q, d)| (d + q.powi(4) - q).abs()).fold(0.0, f64::max);
    let reported = soliton_identities(&g).map_err(|e| e.to_string())?.get("ode_residual_max").unwrap_or(f64::NAN);
    let secs = t0.elapsed().as_secs_f64();
    Ok((
        res <= 1e-8 && closed <= 1e-13 && (reported - res).abs() <= 1e-12 && secs < 1.0,
        format!("max|Q''+Q^4-Q| {res:.2e} (library {reported:.2e}), profile vs closed form {closed:.1e}, {secs:.2}s"),
    ))
}

fn c02_pohozaev() -> Outcome {
    let t0 = Instant::now();
    let (m, d, p) = soliton_integrals_oracle();
    let oracle_ok = (d / m - 3.0 / 7.0).abs() < 1e-12 && (p / m - 10.0 / 7.0).abs() < 1e-12;
    let oracle_energy = (0.5 * d - 0.2 * p) / m;
    let g = Grid::new(60.0, 4096).map_err(|e| e.to_string())?;
    let r = soliton_identities(&g).map_err(|e| e.to_string())?;
    let get = |k: &str| r.get(k).unwrap_or(f64::NAN);
    let d1 = (get("derivative_mass_ratio") - 3.0 / 7.0).abs();
    let d2 = (get("quintic_mass_ratio") - 10.0 / 7.0).abs();
    let fi = get("first_integral_residual_max");
    let em = get("energy_mass_ratio");
    let secs = t0.elapsed().as_secs_f64();
    Ok((
        oracle_ok && d1 <= 1e-8 && d2 <= 1e-8 && fi <= 1e-10 && (em - oracle_energy).abs() <= 1e-8,
        format!(
            "|ratio-3/7| {d1:.1e}, |ratio-10/7| {d2:.1e}, first integral {fi:.1e}, E/M {em:.10} vs quadrature {oracle_energy:.10} (the constant 1/10 is off by {:.3}), {secs:.2}s",
            (em - 0.1).abs()
        ),
    ))
}

fn c03_airy() -> Outcome {
    let t0 = Instant::now();
    let g = Grid::new(2.0 * PI, 64).map_err(|e| e.to_string())?;
    let t = 0.37;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let modes: Vec<(i64, Complex64)> =
        (-20..=20).map(|k| (k, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))).collect();
    let u0 = Field::from_complex_fn(&g, |x| modes.iter().map(|&(k, c)| c * Complex64::from_polar(1.0, k as f64 * x)).sum());
    // single modes against e^{i(kx + t k³)}
    let mut phase = 0.0f64;
    for &(k, _) in &modes {
        let got = airy_propagate(&Field::mode(&g, k), t);
        let phys = got.physical();
        for (j, &x) in g.points().iter().enumerate() {
            let exact = Complex64::from_polar(1.0, k as f64 * x + t * (k as f64).powi(3));
            phase = phase.max((exact - phys[j]).norm());
        }
    }
    // a superposition against the direct mode sum, relative to its size
    let phys = airy_propagate(&u0, t).physical().into_owned();
    let mut sum_err = 0.0f64;
    let mut size = 0.0f64;
    for (j, &x) in g.points().iter().enumerate() {
        let exact: Complex64 =
            modes.iter().map(|&(k, c)| c * Complex64::from_polar(1.0, k as f64 * x + t * (k as f64).powi(3))).sum();
        sum_err = sum_err.max((exact - phys[j]).norm());
        size = size.max(exact.norm());
    }
    let sum_rel = sum_err / size;
    let g2 = Grid::new(40.0, 256).map_err(|e| e.to_string())?;
    let f = Field::from_fn(&g2, |x| (-x * x / 3.0).exp() * (1.0 + x));
    let ft = airy_propagate(&f, 2.5);
    let norm = ((ft.l2_norm() - f.l2_norm()) / f.l2_norm()).abs();
    let back = airy_propagate(&ft, -2.5).max_abs_diff(&f);
    let secs = t0.elapsed().as_secs_f64();
    Ok((
        phase <= 1e-12 && sum_rel <= 1e-12 && norm <= 1e-13 && back <= 1e-12 && secs < 1.0,
        format!("single-mode phase {phase:.1e}, 41-mode sum {sum_rel:.1e} relative, L2 {norm:.1e}, round trip {back:.1e}, {secs:.2}s"),
    ))
}

fn transport_error(g: &Grid, dt: f64, t_end: f64) -> Result<(f64, f64, f64), String> {
    let u0 = Field::from_fn(g, |x| soliton_oracle(x, 1.0, 0.0, g.box_length()));
    let steps = (t_end / dt).round() as usize;
    let cfg = SolverConfig { dt, t_end, snapshot_stride: steps, ..Default::default() };
    let run = evolve(&u0, &cfg).map_err(|e| e.to_string())?;
    let (t, u) = run.trace.last().ok_or("empty trace")?;
    let exact: Vec<f64> = g.points().iter().map(|&x| soliton_oracle(x, 1.0, t, g.box_length())).collect();
    let m = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>() * g.spacing();
    let m0 = m(&u0.real_values());
    let dm = ((m(&u.real_values()) - m0) / m0).abs();
    let e0 = energy(&u0, 4);
    let de = ((energy(u, 4) - e0) / e0).abs();
    Ok((rel_l2(&u.real_values(), &exact), dm, de))
}

fn c04_transport() -> Outcome {
    let t0 = Instant::now();
    let g = Grid::new(100.0, 1024).map_err(|e| e.to_string())?;
    let (err, dm, de) = transport_error(&g, 1e-3, 10.0)?;
    let secs = t0.elapsed().as_secs_f64();
    let (coarse, _, _) = transport_error(&g, 2e-3, 10.0)?;
    let ratio = coarse / err;
    Ok((
        err <= 1e-6 && dm <= 1e-10 && de <= 1e-8 && (14.0..=18.0).contains(&ratio) && secs < 60.0,
        format!("L2 error {err:.2e}, mass drift {dm:.1e}, energy drift {de:.1e}, dt 2e-3/1e-3 error ratio {ratio:.2}, {secs:.1}s"),
    ))
}

fn c05_scaling() -> Outcome {
    let t0 = Instant::now();
    let lambda: f64 = 1.25;
    let g = Grid::new(80.0, 512).map_err(|e| e.to_string())?;
    let gl = g.scaled(lambda).map_err(|e| e.to_string())?;
    let profile = |x: f64| q_closed(x) + 0.1 * (-(x - 3.0) * (x - 3.0) / 4.0).exp();
    let u0 = Field::from_fn(&g, profile);
    let ul0 = Field::from_fn(&gl, |x| lambda.powf(-2.0 / 3.0) * profile(x / lambda));
    let (dt, t_end) = (2e-3, 2.0);
    let l3 = lambda.powi(3);
    let a = evolve(&u0, &SolverConfig { dt, t_end, snapshot_stride: 1000, ..Default::default() }).map_err(|e| e.to_string())?;
    let b = evolve(&ul0, &SolverConfig { dt: dt * l3, t_end: t_end * l3, snapshot_stride: 1000, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let s = lambda.powf(-2.0 / 3.0);
    let ua: Vec<f64> = a.trace.last().ok_or("empty")?.1.real_values().iter().map(|v| s * v).collect();
    let ub = b.trace.last().ok_or("empty")?.1.real_values();
    let rel = rel_l2(&ua, &ub);
    let secs = t0.elapsed().as_secs_f64();
    Ok((rel <= 1e-6 && secs < 120.0, format!("relative L2 discrepancy {rel:.2e} at λ = {lambda}, {secs:.1}s")))
}

/// Largest coefficient error of the library's quartic power against the
/// direct convolution, for random data of band `band` on `m` modes.
fn quartic_error(m: usize, band: i64, seed: u64) -> Result<f64, String> {
    let g = Grid::new(2.0 * PI, m).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coef = std::collections::HashMap::new();
    for k in 0..=band {
        let z = if k == 0 {
            Complex64::new(rng.gen_range(-1.0..1.0), 0.0)
        } else {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        };
        coef.insert(k, z);
        coef.insert(-k, z.conj());
    }
    let u = Field::from_fn(&g, |x| coef.iter().map(|(&k, c)| (c * Complex64::from_polar(1.0, k as f64 * x)).re).sum());
    let fast = g.dealiased_power(&u.spectral(), 4, true);
    let c = |n: i64| coef.get(&n).copied().unwrap_or_default();
    let mut err = 0.0f64;
    for idx in (0..m).filter(|&i| g.is_retained(i)) {
        let n = g.mode_number(idx);
        let mut sum = Complex64::new(0.0, 0.0);
        for a in -band..=band {
            for b in -band..=band {
                for d in -band..=band {
                    sum += c(a) * c(b) * c(d) * c(n - a - b - d);
                }
            }
        }
        err = err.max((sum - fast[idx]).norm());
    }
    Ok(err)
}

fn c06_dealiasing() -> Outcome {
    let mut worst = 0.0f64;
    for (m, band, seed) in [(64, 12, 1), (64, 16, 2), (32, 6, 3), (48, 10, 4)] {
        worst = worst.max(quartic_error(m, band, seed)?);
    }
    Ok((worst <= 1e-10, format!("max coefficient error {worst:.2e} over M ∈ {{32, 48, 64}}")))
}

fn c07_kato() -> Outcome {
    let g = Grid::new(400.0, 1024).map_err(|e| e.to_string())?;
    let u0 = Field::from_fn(&g, |x| (-x * x / 4.0).exp() * (1.0 + 0.5 * x));
    let run = |d: f64| -> Result<(gkdv::norms::KatoMonitor, Trace), String> {
        let n = (5.0 / d).round() as usize + 1;
        let t: Vec<f64> = (0..n).map(|i| i as f64 * d).collect();
        let tr = Trace::sample(t.clone(), |s| airy_propagate(&u0, s)).map_err(|e| e.to_string())?;
        let p: Vec<SolitonParams> = t.iter().map(|&s| SolitonParams::new(1.0, s)).collect();
        let path = ModulationPath::from_samples(t, &p, vec![0.0; n]);
        Ok((kato_identity_monitor(&tr, &path, 100.0, None).map_err(|e| e.to_string())?, tr))
    };
    let (coarse, tr) = run(0.02)?;
    let (fine, _) = run(0.01)?;
    let order = (coarse.max_abs_residual / fine.max_abs_residual).log2();
    // weighted mass by direct summation
    let l = g.box_length();
    let weighted: Vec<f64> = tr
        .times()
        .iter()
        .zip(tr.fields())
        .map(|(&t, u)| {
            g.points()
                .iter()
                .zip(u.real_values())
                .map(|(&x, v)| (((x - t + 0.5 * l).rem_euclid(l) - 0.5 * l) / 100.0).tanh() * v * v)
                .sum::<f64>()
                * g.spacing()
        })
        .collect();
    let quad = 1e-12 * mass(&u0);
    let rise = weighted.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let agree = weighted.iter().zip(&coarse.weighted_mass).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((
        coarse.mean_abs_residual <= 1e-6 && (1.7..=2.3).contains(&order) && rise <= quad && agree <= 1e-10,
        format!(
            "residual {:.2e} per unit time, refinement order {order:.2}, largest rise of ∫tanh u² {rise:.1e} (quadrature {quad:.0e}), library vs direct {agree:.1e}",
            coarse.mean_abs_residual
        ),
    ))
}

struct Sweep {
    _root: tempfile::TempDir,
    manifest: RunManifest,
    children: Vec<(f64, RunManifest)>,
    secs: f64,
}

fn sweep() -> Result<Sweep, String> {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig { trace_stride: None, ..ExperimentConfig::preset(Scenario::Sweep) };
    let t0 = Instant::now();
    let manifest = run_experiment_in(&cfg, root.path()).map_err(|e| e.to_string())?;
    let secs = t0.elapsed().as_secs_f64();
    let children = manifest
        .children
        .iter()
        .map(|c| RunManifest::load(&root.path().join(&c.directory)).map(|m| (c.epsilon, m)).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    Ok(Sweep { _root: root, manifest, children, secs })
}

fn c08_modulation(s: &Sweep) -> Outcome {
    // the fit reproduces exact family members
    let g = Grid::new(200.0, 2048).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut fit_err = 0.0f64;
    for _ in 0..5 {
        let (l, c) = (rng.gen_range(0.8..1.3), rng.gen_range(-5.0..5.0));
        let u = Field::from_fn(&g, |x| soliton_oracle(x, l, c, g.box_length()));
        let p = fit_parameters(&u, &SolitonParams::new(l * 1.05, c + 0.3)).map_err(|e| e.to_string())?;
        fit_err = fit_err.max((p.lambda - l).abs()).max((p.center - c).abs());
    }
    let at = |eps: f64| s.children.iter().find(|(e, _)| (e - eps).abs() < 1e-12).map(|(_, m)| m);
    let mid = at(0.01).and_then(|m| m.modulation.as_ref()).ok_or("no ε = 0.01 child")?;
    let h1c = mid.h1_constant.unwrap_or(f64::INFINITY);
    let mid_secs = at(0.01).map(|m| m.timing.wall_seconds).unwrap_or(f64::INFINITY);
    let mut decay = Vec::new();
    let mut rates = Vec::new();
    for (eps, m) in &s.children {
        let v = m.report("weighted_decay").and_then(|r| r.get("weighted_decay")).ok_or("no weighted decay")?;
        decay.push(v / (eps * eps));
        rates.push(m.modulation.as_ref().map(|d| d.rate_constant).unwrap_or(f64::NAN));
    }
    let spread = decay.iter().copied().fold(0.0, f64::max) / decay.iter().copied().fold(f64::INFINITY, f64::min);
    let rates_ok = rates.iter().all(|r| r.is_finite() && *r >= 0.0);
    Ok((
        fit_err <= 1e-10 && h1c <= 10.0 && spread <= 2.0 && rates_ok && mid_secs < 600.0,
        format!(
            "fit error {fit_err:.1e}, sup‖w‖_H1/ε {h1c:.3}, weighted decay/ε² {:?} (spread {spread:.2}), rate constants {:?}, ε = 0.01 run {mid_secs:.0}s (sweep {:.0}s)",
            decay.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>(),
            rates.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>(),
            s.secs
        ),
    ))
}

fn c09_scattering(s: &Sweep) -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (eps, m) in &s.children {
        let d = m.scatter.as_ref().ok_or("no scatter diagnostics")?;
        let total = d.total_dist();
        let decreasing = total.windows(2).all(|w| w[1] < w[0]);
        let halved = total.last().copied().unwrap_or(f64::INFINITY) <= 0.5 * total[0];
        let duhamel = d.duhamel_gap <= d.duhamel_budget;
        ok &= decreasing && halved && duhamel;
        notes.push(format!(
            "ε {eps}: distances {:?}, last/first {:.3}, Duhamel gap {:.1e} ≤ budget {:.1e}",
            total.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>(),
            total.last().unwrap_or(&f64::NAN) / total[0],
            d.duhamel_gap,
            d.duhamel_budget
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn c10_decoupling(s: &Sweep) -> Outcome {
    let (q_mass, d, p) = soliton_integrals_oracle();
    let oracle_energy = (0.5 * d - 0.2 * p) / q_mass;
    let g = Grid::new(100.0, 1024).map_err(|e| e.to_string())?;
    let mut pure = 0.0f64;
    let mut pure_energy = 0.0f64;
    for lambda in [0.8, 1.0, 1.3] {
        let u0 = Field::from_fn(&g, |x| soliton_oracle(x, lambda, 2.0, g.box_length()));
        let r = decoupling_check(&u0, lambda, &Field::zeros(&g), q_mass, None);
        pure = pure.max(r.get("mass_residual").unwrap_or(f64::NAN).abs());
        pure_energy = pure_energy.max(r.get("energy_residual").unwrap_or(f64::NAN).abs());
    }
    let mut ok = pure <= 1e-8 && pure_energy <= 1e-8 && (oracle_energy + 1.0 / 14.0).abs() < 1e-12;
    let mut notes = vec![format!("pure soliton mass {pure:.1e}, energy {pure_energy:.1e}")];
    for (eps, m) in &s.children {
        let r = m.report("decoupling").ok_or("no decoupling report")?;
        let get = |k: &str| r.get(k).unwrap_or(f64::NAN);
        let (mr, er, mo, eo) = (get("mass_residual"), get("energy_residual"), get("mass_overlap"), get("energy_overlap"));
        let (mn, en) = (get("mass_residual_net"), get("energy_residual_net"));
        let e2 = eps * eps;
        ok &= mn.abs() <= e2 && en.abs() <= e2;
        notes.push(format!(
            "ε {eps}: mass {mr:.2e} = overlap {mo:.2e} + {:.1e}ε², energy {er:.2e} = overlap {eo:.2e} + {:.1e}ε²",
            mn / e2,
            en / e2
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn c11_norm_toolbox() -> Outcome {
    let g = Grid::new(40.0, 128).map_err(|e| e.to_string())?;
    let f = Field::from_fn(&g, |x| (-x * x / 4.0).exp() * (2.0 * x).sin());
    let dt = 0.02;
    let times: Vec<f64> = (0..80).map(|i| i as f64 * dt).collect();
    let tr = Trace::sample(times.clone(), |t| airy_propagate(&f, t)).map_err(|e| e.to_string())?;
    let c = -2.5;
    let scaled = tr.map(|_, u| u.scale(c));
    let n = times.len();
    let path = ModulationPath::from_samples(times.clone(), &vec![SolitonParams::new(1.0, 0.0); n], vec![0.0; n]);
    let mut homog = 0.0f64;
    for kind in [
        NormKind::SobolevHom { s: -1.0 / 6.0 },
        NormKind::SobolevHom { s: 0.5 },
        NormKind::SobolevInhom { s: 1.0 },
        NormKind::LebesgueSpacetime { q: 6.0, r: f64::INFINITY },
        NormKind::LebesgueSpacetime { q: 8.0, r: 8.0 },
        NormKind::Xsb { b: 0.5, q_dyadic: 2.0 },
        NormKind::WeightedKato { sigma: 1.0 },
    ] {
        let spec = NormSpec { kind, window: None };
        let a = evaluate(&spec, &tr, Some(&path)).map_err(|e| e.to_string())?.value;
        let b = evaluate(&spec, &scaled, Some(&path)).map_err(|e| e.to_string())?.value;
        // the weighted Kato integral is quadratic
        let p = if matches!(kind, NormKind::WeightedKato { .. }) { 2 } else { 1 };
        homog = homog.max((b - c.abs().powi(p) * a).abs() / b);
    }
    // Fubini: time first per grid point, then space
    let iterated = spacetime_norm(&tr, 2.0, 2.0, (0.0, times[n - 1])).map_err(|e| e.to_string())?;
    let vals: Vec<Vec<f64>> = tr.fields().iter().map(|u| u.real_values()).collect();
    let space_first: f64 = (0..g.modes())
        .map(|j| {
            (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 } else { 1.0 } * vals[i][j] * vals[i][j]).sum::<f64>() * dt * g.spacing()
        })
        .sum();
    let fubini = (iterated - space_first.sqrt()).abs() / iterated;
    let mut lp_err = 0.0f64;
    for base in [2.0, 1.001] {
        let lp = LittlewoodPaley::new(base).map_err(|e| e.to_string())?;
        let min_xi = 2.0 * PI / g.box_length();
        let (j0, j1) = lp.level_range(min_xi, g.max_wavenumber());
        let mut sum = lp_low(&f, lp.level(j0), &lp);
        for j in j0 + 1..=j1 {
            sum = &sum + &lp_project(&f, j, &lp);
        }
        lp_err = lp_err.max(sum.max_abs_diff(&f));
    }
    let shells = xsb_shells(&tr, (0.0, times[n - 1])).map_err(|e| e.to_string())?;
    let floor = 1e-13 * shells.total();
    let above: Vec<f64> = shells.mass.iter().copied().take_while(|&v| v > floor).collect();
    let decays = above.len() >= 3 && above.windows(2).all(|w| w[1] < w[0]);

    // bilinear functional
    let gb = Grid::new(200.0, 512).map_err(|e| e.to_string())?;
    let bt: Vec<f64> = (0..81).map(|i| -2.0 + i as f64 * 0.05).collect();
    let free = |u: &Field| Trace::sample(bt.clone(), |t| airy_propagate(u, t)).map_err(|e| e.to_string());
    let diag = {
        let m = Field::mode(&gb, 40);
        let t = free(&m)?;
        bilinear_functional(&t, &t, (-2.0, 2.0)).map_err(|e| e.to_string())?
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut packet = |lo: f64, hi: f64| {
        let (k, c, w) = (rng.gen_range(lo..hi), rng.gen_range(-1.0..1.0), rng.gen_range(2.0..3.0));
        Field::from_complex_fn(&gb, move |x: f64| Complex64::from_polar((-(x - c) * (x - c) / (2.0 * w * w)).exp(), k * x))
    };
    let mut ratios = Vec::new();
    let mut asym = 0.0f64;
    for _ in 0..100 {
        let (u, v) = (packet(0.8, 1.2), packet(2.0, 2.5));
        let (tu, tv) = (free(&u)?, free(&v)?);
        let b = bilinear_functional(&tu, &tv, (-2.0, 2.0)).map_err(|e| e.to_string())?;
        let b2 = bilinear_functional(&tv, &tu, (-2.0, 2.0)).map_err(|e| e.to_string())?;
        asym = asym.max((b - b2).abs() / b);
        ratios.push(b / (u.l2_norm() * v.l2_norm()));
    }
    ratios.sort_by(|a, b| a.total_cmp(b));
    let median = ratios[50];
    let band = ratios.iter().map(|r| (r / median - 1.0).abs()).fold(0.0, f64::max);
    // on the line, Plancherel and the Jacobian 3|ξ₁² - ξ₂²| of (ξ₁, ξ₂) ↦ (ξ₁+ξ₂, ξ₁³+ξ₂³) give the ratio 1/√3
    let line = 1.0 / 3f64.sqrt();

    let strichartz = strichartz_constant_sampler(&EnsembleSpec { size: 16, frames: 17, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let unit = strichartz.iter().filter(|e| e.functional == "linft_l2x").map(|e| (e.ratio - 1.0).abs()).fold(0.0, f64::max);
    Ok((
        homog <= 1e-12
            && fubini <= 1e-10
            && lp_err <= 1e-10
            && decays
            && diag <= 1e-12
            && asym <= 1e-12
            && band <= 0.2
            && (median / line - 1.0).abs() <= 0.02
            && unit <= 1e-12,
        format!(
            "homogeneity {homog:.1e}, Fubini {fubini:.1e}, LP partition {lp_err:.1e}, xsb decays over {} shells, bilinear diagonal {diag:.1e}, symmetry {asym:.1e}, free-wave ratio median {median:.4} (line value {line:.4}) within ±{:.1}%, L∞L² ratio {unit:.1e}",
            above.len(),
            100.0 * band
        ),
    ))
}

fn manifest_bytes(dir: &Path) -> Result<Vec<u8>, String> {
    let m = RunManifest::load(dir).map_err(|e| e.to_string())?;
    serde_json::to_vec(&m.without_timing()).map_err(|e| e.to_string())
}

fn c12_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut perturbed = ExperimentConfig::preset(Scenario::PerturbedSoliton);
    perturbed.grid.box_length = 200.0;
    perturbed.grid.modes = 1024;
    perturbed.solver.t_end = 1.5;
    perturbed.solver.snapshot_stride = 20;
    perturbed.checkpoints.count = 3;
    perturbed.kato_scale = None;
    let mut ensemble = ExperimentConfig::preset(Scenario::AiryEnsemble);
    ensemble.ensemble.size = 12;
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, cfg) in [("perturbed", &perturbed), ("ensemble", &ensemble)] {
        let a = tmp.path().join(format!("{name}_a"));
        let b = tmp.path().join(format!("{name}_b"));
        run_experiment_in(cfg, &a).map_err(|e| e.to_string())?;
        run_experiment_in(cfg, &b).map_err(|e| e.to_string())?;
        let same = manifest_bytes(&a)? == manifest_bytes(&b)?;
        let mut files_same = true;
        for f in RunManifest::load(&a).map_err(|e| e.to_string())?.files {
            if f == "manifest.json" {
                continue;
            }
            files_same &= std::fs::read(a.join(&f)).ok() == std::fs::read(b.join(&f)).ok();
        }
        ok &= same && files_same;
        notes.push(format!("{name}: manifests identical {same}, output files identical {files_same}"));
    }
    Ok((ok, notes.join("; ")))
}

fn main() {
    let mut failed = 0;
    let mut report = |id: &str, out: Outcome| {
        let line = match out {
            Ok((true, m)) => format!("PASS  {id:<28} {m}"),
            Ok((false, m)) => {
                failed += 1;
                format!("FAIL  {id:<28} {m}")
            }
            Err(e) => {
                failed += 1;
                format!("FAIL  {id:<28} error: {e}")
            }
        };
        println!("{line}");
    };
    report("01 soliton ODE", c01_soliton_ode());
    report("02 Pohozaev ratios", c02_pohozaev());
    report("03 Airy exactness", c03_airy());
    report("04 soliton transport", c04_transport());
    report("05 scaling covariance", c05_scaling());
    report("06 dealiasing", c06_dealiasing());
    report("07 Kato identity", c07_kato());
    match sweep() {
        Ok(s) => {
            report("08 modulation", c08_modulation(&s));
            report("09 scattering", c09_scattering(&s));
            report("10 decoupling", c10_decoupling(&s));
            println!("      scaling exponents: {}", s.manifest.scaling.iter().map(|f| format!("{} {:.2}", f.quantity, f.exponent)).collect::<Vec<_>>().join(", "));
        }
        Err(e) => {
            for id in ["08 modulation", "09 scattering", "10 decoupling"] {
                report(id, Err(format!("sweep failed: {e}")));
            }
        }
    }
    report("11 norm toolbox", c11_norm_toolbox());
    report("12 determinism", c12_determinism());
    println!("{} of 12 criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
