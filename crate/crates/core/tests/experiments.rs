use std::time::{Duration, Instant};

use geomint::harness::{run_experiment, Experiment, Overrides};

fn defaults(e: Experiment) -> geomint::harness::ExperimentConfig {
    Overrides {
        experiment: Some(e.name().into()),
        ..Default::default()
    }
    .resolve()
    .unwrap()
}

#[test]
fn every_default_configuration_finishes_within_a_minute() {
    for e in Experiment::ALL {
        let start = Instant::now();
        let outcome = run_experiment(&defaults(e)).unwrap();
        let elapsed = start.elapsed();
        assert!(elapsed < Duration::from_secs(60), "{e}: {elapsed:?}");
        assert!(outcome.failure.is_none(), "{e}: {:?}", outcome.failure);
        assert!(!outcome.series.is_empty(), "{e}");
        if let Some(err) = outcome.max_rel_h_err {
            assert!(err.is_finite(), "{e}");
        }
    }
}

#[test]
fn resonance_scan_marks_the_resonant_step() {
    let mut cfg = defaults(Experiment::FpuResonanceScan);
    let resonant = std::f64::consts::PI / 50.0;
    cfg.params.insert("h_min".into(), format!("{}", resonant - 0.01));
    cfg.params.insert("h_max".into(), format!("{}", resonant + 0.01));
    cfg.params.insert("count".into(), "3".into());
    cfg.t_end = 1.0;
    let series = run_experiment(&cfg).unwrap().series;
    let admissible = series.column("admissible").unwrap();
    let distance = series.column("min_distance").unwrap();
    assert_eq!(admissible, vec![1.0, 0.0, 1.0]);
    assert!(distance[1] < 1e-12);
}

#[test]
fn solar_default_keeps_the_planets_bound() {
    let outcome = run_experiment(&defaults(Experiment::Solar)).unwrap();
    assert!(outcome.max_rel_h_err.unwrap() < 1e-2);
    let pluto = outcome.series.column("r_P").unwrap();
    assert!(pluto.iter().all(|r| (25.0..55.0).contains(r)));
}

#[test]
fn convergence_experiment_reports_one_block_per_method() {
    let outcome = run_experiment(&defaults(Experiment::ConvergenceOrders)).unwrap();
    let ids = outcome.series.column("method_id").unwrap();
    let mut distinct = ids.clone();
    distinct.dedup();
    assert_eq!(distinct.len(), Experiment::ConvergenceOrders.methods().len());
}
