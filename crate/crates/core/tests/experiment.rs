//! Experiment-runner mechanics on small fixtures: grid shape, report files,
//! determinism across worker counts, and the reduced-feature-set comparison.

mod common;

use eegcolor::eval::{
    run_experiment, run_experiment_on_matrices, CellStats, CvGrouping, ExperimentConfig,
    FeatureSet, Regime,
};
use eegcolor::features::{FeatureMatrix, FeatureVector, FEATURE_COUNT};
use eegcolor::ingest::{ClassBandGains, ColorClass};
use eegcolor::models::{forest::RfSpec, knn::KnnSpec, ModelFamily, ModelSpec};
use eegcolor::rng::Rng;

fn tiny_config() -> ExperimentConfig {
    ExperimentConfig {
        windows_ms: vec![200, 1000],
        feature_sets: vec![FeatureSet::All],
        families: vec![ModelFamily::Knn, ModelFamily::LogisticRegression],
        regimes: vec![Regime::Intra, Regime::Inter],
        folds: 2,
        jobs: 1,
        ..ExperimentConfig::default()
    }
}

#[test]
fn grid_shape_and_stats_structure() {
    let epochs = common::build_synthetic_epochs(2, 1, 2, &ClassBandGains::separable(), 1.0, 3);
    let report = run_experiment(&epochs, &tiny_config(), None).unwrap();
    // |windows| x |feature sets| x |regimes| x |families| = 2 x 1 x 2 x 2.
    assert_eq!(report.cells.len(), 8);
    for cell in &report.cells {
        match (&cell.regime, &cell.stats) {
            (Regime::Intra, CellStats::Intra { subjects, folds_per_subject, .. }) => {
                assert_eq!(*subjects, 2);
                assert_eq!(*folds_per_subject, 2);
            }
            (Regime::Inter, CellStats::Inter { subjects, .. }) => {
                assert_eq!(*subjects, 2);
            }
            other => panic!("regime/stats mismatch: {other:?}"),
        }
    }
    assert_eq!(report.subjects, vec![1, 2]);
}

#[test]
fn report_files_are_deterministic_across_worker_counts() {
    let epochs = common::build_synthetic_epochs(2, 1, 2, &ClassBandGains::separable(), 1.0, 5);
    let dir = tempfile::tempdir().unwrap();
    let serial_dir = dir.path().join("serial");
    let parallel_dir = dir.path().join("parallel");
    let mut cfg = tiny_config();
    cfg.jobs = 1;
    run_experiment(&epochs, &cfg, Some(&serial_dir)).unwrap();
    cfg.jobs = 2;
    run_experiment(&epochs, &cfg, Some(&parallel_dir)).unwrap();

    let collect = |root: &std::path::Path| -> Vec<(String, Vec<u8>)> {
        let mut files = Vec::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(dir) = stack.pop() {
            for entry in std::fs::read_dir(&dir).unwrap() {
                let path = entry.unwrap().path();
                if path.is_dir() {
                    stack.push(path);
                } else {
                    let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                    files.push((rel, std::fs::read(&path).unwrap()));
                }
            }
        }
        files.sort();
        files
    };
    let a = collect(&serial_dir);
    let b = collect(&parallel_dir);
    assert_eq!(a.len(), b.len());
    assert!(!a.is_empty());
    for ((name_a, bytes_a), (name_b, bytes_b)) in a.iter().zip(&b) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "file {name_a} differs between jobs=1 and jobs=2");
    }
    // Table files exist per (window, metric, feature set).
    assert!(serial_dir.join("w200/table_accuracy_all.csv").exists());
    assert!(serial_dir.join("w1000/table_mcc_all.csv").exists());
    assert!(serial_dir.join("sweep_intra.csv").exists());
    assert!(serial_dir.join("sweep_inter.csv").exists());
    assert!(serial_dir.join("report.json").exists());
    // Table rows: avg_subject + best_subject + inter_subject.
    let table = std::fs::read_to_string(serial_dir.join("w200/table_accuracy_all.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "metric_row,knn,lr");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("avg_subject,"));
    assert!(lines[2].starts_with("best_subject,"));
    assert!(lines[3].starts_with("inter_subject,"));
}

/// Hand-built matrix: 10 informative columns + 76 noise, so selection can
/// find signal that an unsupervised 10-wide bottleneck dilutes.
fn informative_matrix(rows_per_class: usize, subjects: u32, seed: u64) -> FeatureMatrix {
    let mut rng = Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for subject in 1..=subjects {
        for class in 0..3usize {
            for i in 0..rows_per_class {
                let mut values = Vec::with_capacity(FEATURE_COUNT);
                for j in 0..FEATURE_COUNT {
                    if j < 10 {
                        let offset = match (class + j) % 3 {
                            0 => -1.2,
                            1 => 0.0,
                            _ => 1.2,
                        };
                        values.push(offset + 0.45 * rng.normal());
                    } else {
                        values.push(rng.normal());
                    }
                }
                rows.push(FeatureVector {
                    values,
                    label: ColorClass::from_index(class).unwrap(),
                    subject_id: subject,
                    trial_id: 1,
                    window_index: i as u32,
                });
            }
        }
    }
    FeatureMatrix {
        rows,
        normalization: None,
        dropped_windows: 0,
    }
}

#[test]
fn forward_selection_beats_autoencoder_for_random_forest() {
    let matrix = informative_matrix(40, 1, 17);
    let cfg = ExperimentConfig {
        windows_ms: vec![200],
        feature_sets: vec![FeatureSet::Forward10, FeatureSet::Ae10],
        families: vec![ModelFamily::RandomForest],
        regimes: vec![Regime::Intra],
        folds: 3,
        model_overrides: vec![ModelSpec::RandomForest(RfSpec {
            n_estimators: 40,
            ..RfSpec::default()
        })],
        emit_roc: false,
        ..ExperimentConfig::default()
    };
    let report = run_experiment_on_matrices(&[matrix], &cfg, None).unwrap();
    let acc = |fset: FeatureSet| -> f64 {
        let cell = report
            .cells
            .iter()
            .find(|c| c.feature_set == fset)
            .unwrap();
        match &cell.stats {
            CellStats::Intra { accuracy, .. } => accuracy.avg.mean,
            _ => unreachable!(),
        }
    };
    let fwd = acc(FeatureSet::Forward10);
    let ae = acc(FeatureSet::Ae10);
    assert!(
        fwd >= ae,
        "forward10 accuracy {fwd} below ae10 accuracy {ae}"
    );
    assert!(fwd > 0.8, "forward10 accuracy {fwd} unexpectedly low");
}

#[test]
fn by_trial_grouping_uses_one_fold_per_trial() {
    let epochs = common::build_synthetic_epochs(1, 3, 2, &ClassBandGains::separable(), 1.0, 23);
    let cfg = ExperimentConfig {
        windows_ms: vec![1000],
        feature_sets: vec![FeatureSet::All],
        families: vec![ModelFamily::Knn],
        regimes: vec![Regime::Intra],
        grouping: CvGrouping::ByTrial,
        emit_roc: false,
        jobs: 1,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&epochs, &cfg, None).unwrap();
    match &report.cells[0].stats {
        CellStats::Intra { folds_per_subject, .. } => assert_eq!(*folds_per_subject, 3),
        other => panic!("unexpected stats {other:?}"),
    }
}

#[test]
fn roc_entries_cover_subjects_and_classes() {
    let epochs = common::build_synthetic_epochs(2, 1, 2, &ClassBandGains::separable(), 1.0, 29);
    let cfg = ExperimentConfig {
        windows_ms: vec![200],
        feature_sets: vec![FeatureSet::All],
        families: vec![ModelFamily::Knn],
        regimes: vec![Regime::Intra],
        folds: 2,
        emit_roc: true,
        model_overrides: vec![ModelSpec::Knn(KnnSpec { k: 4 })],
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&epochs, &cfg, None).unwrap();
    assert_eq!(report.roc.len(), 2 * 3);
    assert!(report.roc_cell.is_some());
    for entry in &report.roc {
        let last = entry.curve.points.last().unwrap();
        assert_eq!((last.tpr, last.fpr), (1.0, 1.0));
    }
}

#[test]
fn job_failure_flushes_partial_results_and_manifest() {
    let epochs = common::build_synthetic_epochs(2, 1, 2, &ClassBandGains::separable(), 1.0, 31);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("reports");
    // An impossible selection fold count fails every forward10 job while
    // the all-features jobs still succeed.
    let cfg = ExperimentConfig {
        windows_ms: vec![1000],
        feature_sets: vec![FeatureSet::All, FeatureSet::Forward10],
        families: vec![ModelFamily::Knn],
        regimes: vec![Regime::Intra],
        folds: 2,
        select_folds: 1000,
        emit_roc: false,
        ..ExperimentConfig::default()
    };
    let err = run_experiment(&epochs, &cfg, Some(&out)).unwrap_err();
    match err {
        eegcolor::eval::EvalError::ExperimentFailed { manifest } => {
            assert!(manifest.exists());
            let text = std::fs::read_to_string(&manifest).unwrap();
            assert!(text.contains("fewer rows than folds"), "manifest: {text}");
        }
        other => panic!("expected ExperimentFailed, got {other:?}"),
    }
    // Partial results were flushed before the error surfaced.
    assert!(out.join("report.json").exists());
}
