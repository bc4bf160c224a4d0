use std::path::Path;

use surgact::dataset::Granularity;
use surgact::runner::{
    emit_report, generate_synthetic_dataset, load_report, run_experiment, CvMode, Experiment, ExperimentConfig,
    FoldStatus, Phase, SynthOptions, REPORT_JSON, REPORT_TEXT,
};
use surgact::Execution;

fn small_options() -> SynthOptions {
    SynthOptions {
        tasks: 2,
        min_length: 120,
        max_length: 140,
        ..SynthOptions::default()
    }
}

fn quick_config(dir: &Path) -> ExperimentConfig {
    let ds = generate_synthetic_dataset(&small_options(), dir).unwrap();
    let mut cfg = ExperimentConfig::load(&ds.experiment).unwrap();
    cfg.model.epochs = Some(2);
    cfg.output = None;
    cfg
}

#[test]
fn test_trials_are_read_only_after_training() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(dir.path());
    cfg.workers = 1;
    let exp = Experiment::prepare(cfg).unwrap();
    assert!(exp.plans().len() >= 2);
    for plan in exp.plans() {
        exp.run_fold(plan).unwrap();
    }
    let log = exp.access_log();
    for plan in exp.plans() {
        let reads: Vec<_> = log.iter().filter(|a| a.fold == plan.name).collect();
        let first_test = reads.iter().position(|a| a.phase == Phase::Test).unwrap();
        assert!(reads[..first_test].iter().all(|a| a.phase == Phase::Train));
        assert!(reads[first_test..].iter().all(|a| a.phase == Phase::Test));
        for a in &reads {
            match a.phase {
                Phase::Train => assert!(plan.train_trials.contains(&a.key) && !plan.test_trials.contains(&a.key)),
                Phase::Test => assert!(plan.test_trials.contains(&a.key)),
            }
        }
        assert_eq!(reads.len(), plan.train_trials.len() + plan.test_trials.len());
    }
}

#[test]
fn report_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(dir.path());
    let out = dir.path().join("out");
    cfg.output = Some(out.clone());
    let report = run_experiment(cfg).unwrap();
    for f in [REPORT_JSON, REPORT_TEXT, "config.json", "folds.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    for fold in &report.folds {
        assert!(out.join("folds").join(format!("{}.json", fold.name)).is_file());
    }
    assert_eq!(load_report(&out).unwrap(), report);
    let copy = dir.path().join("copy");
    emit_report(&report, &copy).unwrap();
    assert_eq!(load_report(&copy.join(REPORT_JSON)).unwrap(), report);
}

#[test]
fn reported_means_are_fold_means() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(quick_config(dir.path())).unwrap();
    report.check_means().unwrap();
    let accs: Vec<f64> = report.completed_folds().map(|(_, m)| m.mean_accuracy).collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    assert!((report.mean_accuracy.unwrap() - mean).abs() <= 1e-9);
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(dir.path());
    cfg.workers = 1;
    cfg.execution = Execution::Sequential;
    let one = run_experiment(cfg.clone()).unwrap();
    cfg.workers = 0;
    cfg.execution = Execution::Parallel;
    let many = run_experiment(cfg).unwrap();
    assert_eq!(one.payload_json(), many.payload_json());
}

#[test]
fn diverging_fold_is_recorded_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(dir.path());
    cfg.model.learning_rate = Some(1e300);
    let report = run_experiment(cfg).unwrap();
    assert!(!report.folds.is_empty());
    for fold in &report.folds {
        assert!(matches!(fold.status, FoldStatus::Diverged { .. }), "{:?}", fold.status);
        assert!(fold.metrics.is_none());
    }
    assert_eq!(report.mean_accuracy, None);
}

#[test]
fn overlapping_loto_tasks_are_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_config(dir.path());
    cfg.granularity = Granularity::Mp;
    cfg.cv = CvMode::Loto;
    cfg.test_task = Some("S".into());
    cfg.train_tasks = vec!["S".into(), "NP".into()];
    let err = Experiment::prepare(cfg).err().unwrap();
    assert_eq!(err.exit_code(), 1, "{err}");
}

#[test]
fn missing_catalog_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::new(dir.path().join("nope.toml"));
    let err = Experiment::prepare(cfg).err().unwrap();
    assert_eq!(err.exit_code(), 2, "{err}");
}
