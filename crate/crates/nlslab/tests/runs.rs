use nlslab::config::{parse_config, ExperimentConfig, ExperimentKind, InitialData};
use nlslab::experiments::run_experiment;
use nlslab::output::TRAJECTORY_COLUMNS;
use nlslab::HarnessError;
use proptest::prelude::*;

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(kind);
    c.grid.points = 16;
    c.grid.box_length = 16.0;
    c.solver.dt = 0.02;
    c.solver.t_end = 0.5;
    c.solver.sample_stride = 3;
    c.solver.snapshot_stride = 4;
    c.solver.boundary_mass_tol = 1e-3;
    c.initial = InitialData::Gaussian {
        amplitude: 0.3,
        width: 1.0,
        center: [0.0; 3],
    };
    c
}

#[test]
fn series_rows_follow_the_sampling_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_experiment(&small(ExperimentKind::NonlinearDecay), dir.path()).unwrap();
    let mut reader = csv::Reader::from_path(outcome.dir.join("series.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, TRAJECTORY_COLUMNS);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    // 25 steps sampled every third step, plus t = 0 and the final step
    assert_eq!(rows.len(), 25 / 3 + 2);
    let flags: Vec<&str> = rows.iter().map(|r| &r[13]).collect();
    assert!(flags.iter().all(|f| *f == "0" || *f == "1"));
    assert!(outcome.manifest.artifacts.iter().any(|a| a == "linf.svg"));
}

#[test]
fn aborted_run_keeps_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(ExperimentKind::NonlinearDecay);
    // initial data spilling into the boundary shell is refused by the solver
    c.initial = InitialData::Gaussian {
        amplitude: 0.3,
        width: 4.0,
        center: [0.0; 3],
    };
    c.solver.boundary_mass_tol = 1e-9;
    let err = run_experiment(&c, dir.path()).unwrap_err();
    assert!(matches!(err, HarnessError::Numerical(_)));
    assert_eq!(err.exit_code(), 4);
    let text = std::fs::read_to_string(dir.path().join(c.run_id()).join("manifest.json")).unwrap();
    let m: nlslab::RunManifest = serde_json::from_str(&text).unwrap();
    assert!(!m.passed && m.error.is_some());
}

fn kind_strategy() -> impl Strategy<Value = ExperimentKind> {
    prop::sample::select(ExperimentKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips(kind in kind_strategy(), seed in any::<u32>(), pow in 2u32..7,
                          dt in 1e-4..0.5f64, amp in 0.01..2.0f64, stride in 1usize..20) {
        let mut c = small(kind);
        c.seed = seed as u64;
        c.grid.points = 1 << pow;
        c.solver.dt = dt;
        c.solver.snapshot_stride = 2 * stride;
        c.initial = c.initial.with_amplitude(amp).unwrap();
        if kind == ExperimentKind::LinearDecay {
            c.model = c.model.with_sign(nlslab_core::Sign::Off);
        }
        let back = parse_config(&c.to_toml()).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(back.run_id(), c.run_id());
        prop_assert!(c.run_id().starts_with(kind.as_str()));
    }
}
