//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs as a plain binary so the lines are always shown.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use nlslab::config::{ExperimentConfig, ExperimentKind, InitialData};
use nlslab::experiments::{doubling_factor, envelope_ratio, richardson_ratio, run_experiment};
use nlslab_core::ensemble::{
    build_partition, ensemble_run, exact_moment_constant, gaussian_moment_check, EnsembleConfig,
    SmoothBump,
};
use nlslab_core::observables::{fit_decay, weighted_envelope, FitWindow, ObservableSeries};
use nlslab_core::propagator::LinearDecayOptions;
use nlslab_core::scattering::{
    default_rate_window, default_window, duhamel_split, extract_scattering_state, scattering_rate,
    spacetime_tail,
};
use nlslab_core::solver::{
    basic_observables, evolve, standard_observables, Energy, LpNorm, Mass, Observable,
    PseudoConformal, SolverConfig, Trajectory,
};
use nlslab_core::{linear_decay_experiment, ComplexField, Grid, ModelSpec};

type Outcome = Result<Vec<Check>, Box<dyn std::error::Error>>;

struct Check {
    label: String,
    pass: bool,
}

fn check(label: impl Into<String>, pass: bool) -> Check {
    Check {
        label: label.into(),
        pass,
    }
}

fn fit(series: &ObservableSeries, a: f64, b: f64) -> Result<f64, Box<dyn std::error::Error>> {
    Ok(fit_decay(series, FitWindow::new(a, b)?)?.exponent)
}

fn gaussian(points: usize, box_length: f64, amplitude: f64, width: f64) -> ComplexField {
    let grid = Grid::new(3, points, box_length).unwrap();
    ComplexField::gaussian(grid, amplitude, width, [0.0; 3])
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let u0 = gaussian(64, 64.0, 1.0, 1.0);
    let ts: Vec<f64> = (1..=200).map(|k| 0.05 * k as f64).collect();
    let opts = LinearDecayOptions {
        boundary_mass_tol: 1e-4,
        fit_t_min: 2.0,
        ..Default::default()
    };
    let model = ModelSpec::linear();
    let linf = linear_decay_experiment(&u0, &model, &ts, f64::INFINITY, opts)?;
    let l6 = linear_decay_experiment(&u0, &model, &ts, 6.0, opts)?;
    let h = linf.validity_horizon;
    let e_inf = linf.fit.map_err(|e| format!("linf fit: {e}"))?.exponent;
    let e6 = l6.fit.map_err(|e| format!("l6 fit: {e}"))?.exponent;
    let secs = start.elapsed().as_secs_f64();
    Ok(vec![
        check(format!("horizon {h:.2}"), h > 2.0),
        check(
            format!("linf exponent {e_inf:.4} in 1.50 +/- 0.05"),
            (e_inf - 1.5).abs() <= 0.05,
        ),
        check(
            format!("l6 exponent {e6:.4} in 1.00 +/- 0.05"),
            (e6 - 1.0).abs() <= 0.05,
        ),
        check(format!("runtime {secs:.1} s <= 120 s"), secs <= 120.0),
    ])
}

fn criterion_2() -> Outcome {
    let u0 = gaussian(64, 12.0, 0.3, 1.0);
    let cfg = SolverConfig {
        sample_stride: 250,
        snapshot_stride: usize::MAX,
        ..SolverConfig::new(2e-3, 10.0)
    };
    let obs: Vec<Box<dyn Observable>> = vec![Box::new(Mass), Box::new(Energy)];
    let traj = evolve(&u0, &ModelSpec::cubic(), &cfg, &obs)?;
    let drift = |name: &str| -> Result<f64, Box<dyn std::error::Error>> {
        let s = traj.require_series(name)?;
        let v0 = s.values[0];
        Ok(s.values
            .iter()
            .map(|v| (v - v0).abs() / v0.abs())
            .fold(0.0, f64::max))
    };
    let (dm, de) = (drift("mass")?, drift("energy")?);
    Ok(vec![
        check(format!("mass drift {dm:.2e} <= 1e-10"), dm <= 1e-10),
        check(format!("energy drift {de:.2e} <= 1e-6"), de <= 1e-6),
    ])
}

fn criterion_3() -> Outcome {
    let u0 = gaussian(32, 16.0, 0.5, 1.0);
    let cfg = SolverConfig::new(0.04, 1.0);
    let (ratio, [e1, e2]) = richardson_ratio(&u0, &ModelSpec::cubic(), &cfg)?;
    Ok(vec![check(
        format!("Richardson ratio {ratio:.3} in [3.5, 4.5] (errors {e1:.3e}, {e2:.3e})"),
        (3.5..=4.5).contains(&ratio),
    )])
}

/// Long small-data cubic run shared by criteria 4, 6, 7 and 8.
fn shared_run() -> Result<Trajectory, Box<dyn std::error::Error>> {
    let u0 = gaussian(128, 64.0, 0.2, 1.0);
    let cfg = SolverConfig {
        sample_stride: 2,
        snapshot_stride: 6,
        boundary_mass_tol: 1e-4,
        ..SolverConfig::new(0.02, 5.0)
    };
    Ok(evolve(
        &u0,
        &ModelSpec::cubic(),
        &cfg,
        &standard_observables(),
    )?)
}

fn criterion_4(traj: &Trajectory) -> Outcome {
    let h = traj.validity_horizon;
    let linf = traj.require_series("linf")?;
    let e = fit(linf, 2.0, h)?;
    let ratio = envelope_ratio(linf, 1.5, h);
    Ok(vec![
        check(
            format!("linf exponent {e:.4} on [2, {h:.2}] in [1.4, 1.6]"),
            (1.4..=1.6).contains(&e),
        ),
        check(
            format!("envelope final/median {ratio:.3} <= 1.5"),
            ratio <= 1.5,
        ),
    ])
}

/// `sum |x|^2 |u|^2 dx`, straight from the lattice positions.
fn x_weighted_mass(u: &ComplexField) -> f64 {
    let grid = u.grid();
    u.values()
        .iter()
        .enumerate()
        .map(|(i, z)| grid.position(i).iter().map(|x| x * x).sum::<f64>() * z.norm_sqr())
        .sum::<f64>()
        * grid.cell_volume()
}

fn criterion_5() -> Outcome {
    let u0 = gaussian(64, 20.0, 0.3, 1.0);
    let cfg = SolverConfig {
        sample_stride: 10,
        snapshot_stride: usize::MAX,
        ..SolverConfig::new(1e-3, 1.0)
    };
    let obs: Vec<Box<dyn Observable>> = vec![Box::new(PseudoConformal), Box::new(LpNorm::new(4.0))];
    let traj = evolve(&u0, &ModelSpec::cubic(), &cfg, &obs)?;
    let v = traj.require_series("V_pc")?;
    let l4 = traj.require_series("l4")?;
    let v0 = v.values[0];
    let x_sq = x_weighted_mass(&traj.initial);
    let v0_err = (v0 - x_sq).abs() / x_sq;
    let rise = v
        .values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    // dV/dt = -2 t ||u||_4^4 for the defocusing cubic equation in three dimensions
    let mut worst: f64 = 0.0;
    for k in 1..v.times.len() - 1 {
        let fd = (v.values[k + 1] - v.values[k - 1]) / (v.times[k + 1] - v.times[k - 1]);
        let exact = -2.0 * v.times[k] * l4.values[k].powi(4);
        worst = worst.max((fd - exact).abs() / exact.abs());
    }
    Ok(vec![
        check(
            format!("V(0) vs ||x u0||^2 relative {v0_err:.2e} <= 1e-6"),
            v0_err <= 1e-6,
        ),
        check(
            format!("largest V increase {:.2e} V(0) <= 1e-6 V(0)", rise / v0),
            rise <= 1e-6 * v0,
        ),
        check(
            format!("dV/dt vs -2t||u||_4^4 relative {worst:.2e} <= 1e-3"),
            worst <= 1e-3,
        ),
    ])
}

fn criterion_6(traj: &Trajectory) -> Outcome {
    let h = traj.validity_horizon;
    let e = fit(traj.require_series("l6")?, 2.0, h)?;
    Ok(vec![check(
        format!("l6 exponent {e:.4} on [2, {h:.2}] in 1.0 +/- 0.1"),
        (e - 1.0).abs() <= 0.1,
    )])
}

fn criterion_7(traj: &Trajectory) -> Outcome {
    let t_list = [1.2, 2.4, 4.8];
    let state = extract_scattering_state(traj, &t_list, 1e-2)?;
    let rate = scattering_rate(traj, &state, default_rate_window(traj)?)?;
    let e = rate
        .fit
        .ok_or("scattering gap vanished identically")?
        .exponent;
    let factor = doubling_factor(&t_list, &state.gaps).ok_or("too few gaps")?;
    let (lo, hi) = (2f64.powf(1.7), 2f64.powf(2.3));
    Ok(vec![
        check(
            format!("H^1/2 gap exponent {e:.4} in 2.0 +/- 0.3"),
            (e - 2.0).abs() <= 0.3,
        ),
        check(
            format!("Cauchy gap factor per doubling {factor:.3} in [{lo:.2}, {hi:.2}]"),
            (lo..=hi).contains(&factor),
        ),
    ])
}

fn criterion_8(traj: &Trajectory) -> Outcome {
    let half = 0.5 * traj.validity_horizon;
    let s_list: Vec<f64> = (0..10)
        .map(|k| 1.0 + (half - 1.0) * k as f64 / 9.0)
        .collect();
    let tail = spacetime_tail(traj, &s_list)?;
    let e = tail.fit.ok_or("tail fit unavailable")?.exponent;
    let proxy = tail.truncation_proxy.iter().copied().fold(0.0, f64::max);
    Ok(vec![
        check(
            format!("L5 tail exponent {e:.4} in 0.70 +/- 0.15"),
            (e - 0.7).abs() <= 0.15,
        ),
        check(format!("truncation proxy {proxy:.3} < 0.1"), proxy < 0.1),
    ])
}

fn criterion_9() -> Outcome {
    let u0 = gaussian(64, 32.0, 0.5, 1.0);
    let coarse_cfg = SolverConfig {
        snapshot_stride: 20,
        boundary_mass_tol: 1e-4,
        ..SolverConfig::new(0.005, 2.0)
    };
    let fine_cfg = SolverConfig {
        snapshot_stride: 10,
        ..coarse_cfg
    };
    let model = ModelSpec::cubic();
    let coarse = evolve(&u0, &model, &coarse_cfg, &basic_observables())?;
    let fine = evolve(&u0, &model, &fine_cfg, &basic_observables())?;
    let m1 = nlslab_core::observables::DataProfile::new(&u0)?.m1();
    let env = weighted_envelope(fine.require_series("linf")?, 1.5);
    let mut out = Vec::new();
    for t in [1.0, 1.5] {
        let m = default_window(t, m1);
        let c = duhamel_split(&coarse, t, m)?;
        let f = duhamel_split(&fine, t, m)?;
        let alt = duhamel_split(&fine, t, 0.25 * t)?;
        let ratio = c.residual / f.residual;
        let sum = f.sum();
        let inv = sum.sub(&alt.sum())?.mass().sqrt() / sum.mass().sqrt();
        let absorbed = f.f2_absorbed(&env).unwrap_or(false);
        out.push(check(
            format!("t={t}: residual ratio {ratio:.3} in [3.5, 4.5]"),
            (3.5..=4.5).contains(&ratio),
        ));
        out.push(check(
            format!(
                "t={t}: sum change M={:.3} -> {:.3} relative {inv:.1e} <= 1e-10",
                f.m, alt.m
            ),
            inv <= 1e-10,
        ));
        out.push(check(
            format!("t={t}: ||F2||_inf <= A(t) t^-1.5 / 2"),
            absorbed,
        ));
    }
    Ok(out)
}

/// `E|g|^rho = (rho - 1)!!` for even `rho`.
fn even_gaussian_moment(rho: u32) -> f64 {
    (1..rho).step_by(2).map(f64::from).product()
}

fn criterion_10() -> Outcome {
    let mut out = Vec::new();
    let grid = Grid::new(3, 64, 32.0)?;
    let partition = build_partition(&grid, 2.0, &SmoothBump::for_spacing(2.0))?;
    let err = partition
        .total()
        .iter()
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max);
    out.push(check(
        format!("partition sum error {err:.1e} <= 1e-12"),
        err <= 1e-12,
    ));

    let c: Vec<f64> = (0..16).map(|n| 1.0 / (1.0 + n as f64)).collect();
    for rho in [2u32, 4, 8, 16] {
        let exact = even_gaussian_moment(rho).powf(1.0 / rho as f64) / (rho as f64).sqrt();
        let m = gaussian_moment_check(&c, rho as f64, 100_000, 7 + rho as u64)?;
        let closed = (m.exact - exact).abs() <= 1e-12 * exact;
        out.push(check(
            format!(
                "rho={rho}: moment ratio {:.4} <= 1.05 x {exact:.4}",
                m.ratio
            ),
            closed && m.ratio <= 1.05 * exact,
        ));
    }
    assert!((exact_moment_constant(2.0) - 1.0 / 2f64.sqrt()).abs() < 1e-12);

    let start = Instant::now();
    let u0 = ComplexField::gaussian(grid, 0.3, 1.5, [0.0; 3]);
    let cfg = SolverConfig {
        sample_stride: 5,
        snapshot_stride: usize::MAX,
        boundary_mass_tol: 1e-4,
        ..SolverConfig::new(0.02, 3.0)
    };
    let ec = EnsembleConfig {
        n_samples: 64,
        master_seed: 2024,
        lattice_spacing: 2.0,
        ..Default::default()
    };
    let report = ensemble_run(&u0, &ModelSpec::cubic(), &cfg, &ec)?;
    let secs = start.elapsed().as_secs_f64();
    let at4 = ec
        .lambda_multiples
        .iter()
        .position(|&m| m == 4.0)
        .map_or(f64::NAN, |i| report.tail[i]);
    let monotone = report.tail.windows(2).all(|w| w[1] <= w[0]);
    out.push(check(
        format!(
            "64 samples in {secs:.0} s <= 1800 s ({} failed)",
            report.failed
        ),
        secs <= 1800.0 && report.failed < report.n_samples,
    ));
    out.push(check(
        format!("tail nonincreasing {:?}", report.tail),
        monotone,
    ));
    out.push(check(format!("tail at 4x median {at4} <= 0.1"), at4 <= 0.1));
    Ok(out)
}

/// Small configurations covering every experiment kind.
fn determinism_configs() -> Vec<ExperimentConfig> {
    ExperimentKind::ALL
        .iter()
        .map(|&kind| {
            let mut c = ExperimentConfig::new(kind);
            c.seed = 5;
            c.grid.points = 32;
            c.grid.box_length = 16.0;
            c.solver.dt = 0.01;
            c.solver.t_end = 1.0;
            c.solver.snapshot_stride = 10;
            c.solver.sample_stride = 5;
            c.solver.boundary_mass_tol = 1e-4;
            c.initial = InitialData::Gaussian {
                amplitude: 0.3,
                width: 1.0,
                center: [0.0; 3],
            };
            c.analysis.fit_t_min = 0.3;
            c.analysis.amplitudes = vec![0.2, 0.4];
            c.ensemble.n_samples = 3;
            c
        })
        .collect()
}

fn collect_files(dir: &Path, out: &mut BTreeMap<String, Vec<u8>>, root: &Path) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect_files(&path, out, root);
        } else if matches!(
            path.extension().and_then(|e| e.to_str()),
            Some("csv" | "snap")
        ) {
            let key = path.strip_prefix(root).unwrap().display().to_string();
            out.insert(key, fs::read(&path).unwrap());
        }
    }
}

fn criterion_11() -> Outcome {
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir()?;
        for config in determinism_configs() {
            run_experiment(&config, dir.path())?;
        }
        let mut files = BTreeMap::new();
        collect_files(dir.path(), &mut files, dir.path());
        runs.push(files);
    }
    let differing: Vec<&String> = runs[0]
        .iter()
        .filter(|(k, v)| runs[1].get(*k) != Some(v))
        .map(|(k, _)| k)
        .collect();
    Ok(vec![
        check(
            format!("{} artifacts compared", runs[0].len()),
            runs[0].len() == runs[1].len() && runs[0].len() > 11,
        ),
        check(
            format!("{} differ {:?}", differing.len(), differing),
            differing.is_empty(),
        ),
    ])
}

fn report(id: u32, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let secs = start.elapsed().as_secs_f64();
    let (pass, detail) = match result {
        Ok(Ok(checks)) => (
            !checks.is_empty() && checks.iter().all(|c| c.pass),
            checks
                .iter()
                .map(|c| format!("{}{}", if c.pass { "" } else { "[x] " }, c.label))
                .collect::<Vec<_>>()
                .join("; "),
        ),
        Ok(Err(e)) => (false, format!("error: {e}")),
        Err(_) => (false, "panicked".into()),
    };
    println!(
        "criterion {id:>2} {} {name} ({secs:.1} s): {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn main() {
    let mut all = true;
    all &= report(1, "linear dispersive decay", criterion_1);
    all &= report(2, "conservation", criterion_2);
    all &= report(3, "integrator order", criterion_3);
    match catch_unwind(shared_run) {
        Ok(Ok(traj)) => {
            all &= report(4, "nonlinear decay", || criterion_4(&traj));
            all &= report(6, "L6 decay", || criterion_6(&traj));
            all &= report(7, "scattering rate", || criterion_7(&traj));
            all &= report(8, "spacetime tail", || criterion_8(&traj));
        }
        other => {
            let why = match other {
                Ok(Err(e)) => e.to_string(),
                _ => "panicked".into(),
            };
            for (id, name) in [
                (4, "nonlinear decay"),
                (6, "L6 decay"),
                (7, "scattering rate"),
                (8, "spacetime tail"),
            ] {
                println!("criterion {id:>2} FAIL {name}: shared run failed: {why}");
            }
            all = false;
        }
    }
    all &= report(5, "pseudo-conformal monotonicity", criterion_5);
    all &= report(9, "Duhamel split", criterion_9);
    all &= report(10, "randomization", criterion_10);
    all &= report(11, "determinism", criterion_11);
    if !all {
        println!("acceptance: FAILED");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
