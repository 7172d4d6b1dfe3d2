use std::fs;

use eif_core::config::Config;
use eif_core::experiment::{
    read_robustness_spec, read_trial_log, replay_trial, run_accuracy_sweep, run_robustness_sweep,
    write_accuracy, write_robustness, SweepKind, SweepSpec,
};
use eif_core::servo::Policy;
use eif_core::sim::NoiseModel;

#[test]
fn zero_noise_position_sweep_is_quantization_only() {
    let spec = SweepSpec {
        noise: Some(NoiseModel::NONE),
        ..SweepSpec::accuracy_position(0)
    };
    let r = run_accuracy_sweep(&Config::default(), &spec).unwrap();
    assert_eq!(r.rows.len(), 49);
    assert!(
        r.sd("x_mm").unwrap() <= 0.01 && r.sd("y_mm").unwrap() <= 0.01,
        "{:?}",
        r.summary
    );
}

#[test]
fn yaw_sweep_covers_nine_jogs() {
    let r = run_accuracy_sweep(&Config::default(), &SweepSpec::accuracy_yaw(3)).unwrap();
    assert_eq!(r.rows.len(), 9);
    assert_eq!(r.summary.failures, 0);
    assert_eq!(r.rows[0].truth[2], 8.0);
    assert!(r.sd("yaw_deg").unwrap() < 0.2);
}

#[test]
fn accuracy_outputs_have_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_accuracy_sweep(&Config::default(), &SweepSpec::accuracy_tilt(1)).unwrap();
    let files = write_accuracy(dir.path(), &r).unwrap();
    assert_eq!(files.len(), 2);
    let mut reader = csv::Reader::from_path(&files[0]).unwrap();
    let header = reader.headers().unwrap().clone();
    assert_eq!(&header[0], "index");
    assert!(header.iter().any(|h| h == "error_theta_x_deg"));
    assert_eq!(reader.records().count(), 49);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&files[1]).unwrap()).unwrap();
    assert_eq!(summary["kind"], "accuracy-tilt");
    assert_eq!(summary["rows"], 49);
}

#[test]
fn robustness_log_round_trips_and_replays() {
    let config = Config::default();
    let spec = SweepSpec::robustness(vec![0.4, 1.6], 2, 5);
    let r = run_robustness_sweep(&config, &spec).unwrap();
    assert_eq!(r.trials.len(), spec.row_count());
    // Both policies of one trial share a seed.
    assert_eq!(r.trials[0].seed, r.trials[1].seed);
    assert_ne!(r.trials[0].record.policy, r.trials[1].record.policy);
    assert_eq!(r.trials[0].record.delta, r.trials[1].record.delta);

    let dir = tempfile::tempdir().unwrap();
    let files = write_robustness(dir.path(), &r).unwrap();
    let log = read_trial_log(&files[2]).unwrap();
    assert_eq!(log, r.trials);
    assert_eq!(read_robustness_spec(&files[1]).unwrap(), spec);
    let calibration = config.reference_calibration().unwrap();
    for t in &log {
        assert!(replay_trial(&config, calibration, t).unwrap());
    }
    assert_eq!(
        csv::Reader::from_path(&files[0]).unwrap().records().count(),
        r.trials.len()
    );
    assert_eq!(r.rate(1.6, Policy::ClosedLoop), Some(1.0));
}

#[test]
fn specs_of_the_wrong_kind_are_rejected() {
    let config = Config::default();
    assert!(run_accuracy_sweep(&config, &SweepSpec::robustness(vec![1.0], 1, 0)).is_err());
    assert!(run_robustness_sweep(&config, &SweepSpec::accuracy_yaw(0)).is_err());
    let empty = SweepSpec {
        grid: vec![],
        ..SweepSpec::accuracy_position(0)
    };
    assert!(run_accuracy_sweep(&config, &empty).is_err());
    assert_eq!(SweepSpec::accuracy_yaw(0).kind, SweepKind::AccuracyYaw);
}
