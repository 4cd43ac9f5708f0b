use nlslab_core::observables::{
    decay_envelope, fit_decay, inverse_pseudoconformal_transform, j_norm, pseudoconformal_energy,
    pseudoconformal_transform, pseudoconformal_v, DataProfile, FitWindow, ObservableSeries,
};
use nlslab_core::solver::{evolve, BoundaryShell, Observable, PseudoConformal, SolverConfig};
use nlslab_core::{free_evolve, ComplexField, Grid, ModelSpec};
use proptest::prelude::*;

fn series(values: &[f64]) -> ObservableSeries {
    let times = (1..=values.len()).map(|k| 0.1 * k as f64).collect();
    ObservableSeries::new("linf", times, values.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn envelope_is_nondecreasing_and_refinement_monotone(
        values in prop::collection::vec(1e-6..10.0f64, 4..60), keep in 1usize..4) {
        let full = series(&values);
        let env = decay_envelope(&full);
        prop_assert!(env.values.windows(2).all(|w| w[1] >= w[0]));
        // every keep-th sample: a coarser sampling of the same curve
        let idx: Vec<usize> = (0..values.len()).step_by(keep).collect();
        let coarse = ObservableSeries::new(
            "linf",
            idx.iter().map(|&i| full.times[i]).collect(),
            idx.iter().map(|&i| values[i]).collect(),
        ).unwrap();
        let coarse_env = decay_envelope(&coarse);
        for (t, a) in coarse_env.times.iter().zip(&coarse_env.values) {
            prop_assert!(env.at(*t).unwrap() >= *a);
        }
    }

    #[test]
    fn fit_exponent_ignores_scale(rate in 0.1..3.0f64, noise in prop::collection::vec(-0.05..0.05f64, 30),
                                  scale_pow in -3i32..=3) {
        let ts: Vec<f64> = (1..=30).map(|k| 0.5 * k as f64).collect();
        let vs: Vec<f64> = ts.iter().zip(&noise).map(|(t, e)| t.powf(-rate) * (1.0 + e)).collect();
        let base = ObservableSeries::new("x", ts.clone(), vs.clone()).unwrap();
        let c = 10f64.powi(scale_pow);
        let scaled = ObservableSeries::new("x", ts, vs.iter().map(|v| c * v).collect()).unwrap();
        let w = FitWindow::new(1.0, 15.0).unwrap();
        let (a, b) = (fit_decay(&base, w).unwrap(), fit_decay(&scaled, w).unwrap());
        prop_assert!((a.exponent - b.exponent).abs() <= 1e-12 * a.exponent.abs().max(1.0));
        prop_assert!((b.log_constant - a.log_constant - c.ln()).abs() <= 1e-9);
        prop_assert!((0.0..=1.0).contains(&a.r_squared));
    }
}

#[test]
fn j_commutes_with_free_flow() {
    let grid = Grid::new(3, 64, 32.0).unwrap();
    let model = ModelSpec::linear();
    let shell = BoundaryShell::new(grid, 0.1, 1e-6).unwrap();
    let mut checked = 0;
    for width in [0.8, 1.0, 1.5] {
        let u0 = ComplexField::gaussian(grid, 1.0, width, [0.5, -0.25, 0.0]);
        let x_norm = DataProfile::new(&u0).unwrap().x_l2;
        for t in [0.25, 0.5, 1.0, 2.0] {
            let u = free_evolve(&u0, t, &model).unwrap();
            if shell.exceeded(&u) {
                continue;
            }
            let diff = (j_norm(&u, t).unwrap() - x_norm).abs();
            assert!(diff <= 1e-8, "width {width} t {t}: {diff:e}");
            checked += 1;
        }
    }
    assert!(checked >= 9);
}

#[test]
fn pseudoconformal_transform_identities() {
    let grid = Grid::new(3, 128, 32.0).unwrap();
    let u0 = ComplexField::gaussian(grid, 0.5, 1.0, [0.0; 3]);
    for t in [0.5, 0.75, 1.0] {
        let u = free_evolve(&u0, t, &ModelSpec::linear()).unwrap();
        let (v, s) = pseudoconformal_transform(&u, t).unwrap();
        assert!((s + 1.0 / t).abs() < 1e-15);
        let mass_err = (v.mass() - u.mass()).abs() / u.mass();
        assert!(mass_err <= 1e-10, "t {t}: isometry {mass_err:e}");
        let h = pseudoconformal_energy(&v, s, 3).unwrap();
        let big_v = pseudoconformal_v(&u, t, 3).unwrap();
        let rel = (h - big_v / 8.0).abs() / (big_v / 8.0);
        assert!(rel <= 1e-10, "t {t}: H {h} vs V/8 {}", big_v / 8.0);
        let back = inverse_pseudoconformal_transform(&v, s).unwrap();
        let round = back.sub(&u).unwrap().mass().sqrt() / u.mass().sqrt();
        assert!(round <= 1e-6, "t {t}: round trip {round:e}");
    }
}

#[test]
fn pseudoconformal_v_is_nonincreasing() {
    let grid = Grid::new(3, 32, 12.0).unwrap();
    let u0 = ComplexField::gaussian(grid, 0.6, 1.0, [0.0; 3]);
    let cfg = SolverConfig {
        sample_stride: 10,
        boundary_mass_tol: 0.5,
        ..SolverConfig::new(2e-3, 0.5)
    };
    let obs: Vec<Box<dyn Observable>> = vec![Box::new(PseudoConformal)];
    let traj = evolve(&u0, &ModelSpec::cubic(), &cfg, &obs).unwrap();
    let v = traj.require_series("V_pc").unwrap();
    for w in v.values.windows(2) {
        assert!(w[1] <= w[0] + 1e-6 * v.values[0], "{} -> {}", w[0], w[1]);
    }
}
