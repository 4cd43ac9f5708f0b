use nlslab_core::observables::DataProfile;
use nlslab_core::scattering::{default_window, duhamel_split, extract_scattering_state, u_nl};
use nlslab_core::solver::{basic_observables, evolve, SolverConfig, Trajectory};
use nlslab_core::{ComplexField, Grid, ModelSpec};

fn run(stride: usize) -> Trajectory {
    let grid = Grid::new(3, 32, 16.0).unwrap();
    let u0 = ComplexField::gaussian(grid, 0.5, 1.0, [0.0; 3]);
    let cfg = SolverConfig {
        snapshot_stride: stride,
        boundary_mass_tol: 1e-3,
        ..SolverConfig::new(0.01, 1.0)
    };
    evolve(&u0, &ModelSpec::cubic(), &cfg, &basic_observables()).unwrap()
}

#[test]
fn duhamel_consistency_and_window_additivity() {
    let coarse = run(10);
    let fine = run(5);
    let m1 = DataProfile::new(&coarse.initial).unwrap().m1();
    let t = 1.0;
    let m = default_window(t, m1);
    assert!(m > 0.0 && m <= t / 2.0);
    let c = duhamel_split(&coarse, t, m).unwrap();
    let f = duhamel_split(&fine, t, m).unwrap();
    let ratio = c.residual / f.residual;
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");

    // the split point moves the pieces but not their sum
    let other = duhamel_split(&fine, t, 0.2).unwrap();
    assert!(other.f1.sub(&f.f1).unwrap().mass() > 0.0);
    let sum = f.sum();
    let gap = sum.sub(&other.sum()).unwrap().mass().sqrt();
    assert!(gap <= 1e-10 * sum.mass().sqrt(), "gap {gap:e}");

    // the nonlinear part matches the sum up to the reconstruction residual
    let unl = u_nl(&fine, t).unwrap();
    let diff = unl.sub(&sum).unwrap().mass().sqrt();
    assert!(
        (diff - f.residual).abs() <= 1e-12 + 1e-9 * diff,
        "{diff} vs {}",
        f.residual
    );
}

#[test]
fn accepted_state_has_small_cauchy_gap() {
    let traj = run(10);
    let times = [0.2, 0.5, 1.0];
    let tol = 2e-2;
    let state = extract_scattering_state(&traj, &times, tol).unwrap();
    assert!(state.cauchy_gap <= tol);
    assert_eq!(state.gaps.len(), 2);
    assert!(state
        .gaps
        .iter()
        .any(|&(t, g)| t == state.extraction_time && g == state.cauchy_gap));
}

#[test]
fn tight_tolerance_reports_nonconvergence() {
    let traj = run(10);
    assert!(extract_scattering_state(&traj, &[0.2, 0.5, 1.0], 1e-4).is_err());
}
