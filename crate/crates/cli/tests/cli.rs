//! End-to-end CLI contract: exit codes, file outputs, manifests, and the
//! composability of the synth -> extract -> evaluate -> report path.

use std::path::Path;
use std::process::{Command, Output};

fn eegcolor(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eegcolor"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_code(out: &Output, expected: i32) {
    let code = out.status.code().unwrap_or(-1);
    assert_eq!(
        code,
        expected,
        "exit {code}, stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn smoke_path_synth_extract_evaluate_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = eegcolor(
        d,
        &[
            "synth", "--seed", "7", "--subjects", "2", "--trials", "1", "--reps", "3",
            "--out", "data",
        ],
    );
    assert_code(&out, 0);
    assert!(d.join("data/s01_t01_recording.csv").exists());
    assert!(d.join("data/s02_t01_schedule.csv").exists());
    assert!(d.join("data/manifest.json").exists());

    let out = eegcolor(d, &["extract", "--in", "data", "--window", "200"]);
    assert_code(&out, 0);
    assert!(d.join("features.csv").exists());
    assert!(d.join("feature_names_v1.txt").exists());
    assert!(d.join("features.csv.manifest.json").exists());
    let header = std::fs::read_to_string(d.join("features.csv")).unwrap();
    let cols = header.lines().next().unwrap().split(',').count();
    assert_eq!(cols, 86 + 4);

    let out = eegcolor(
        d,
        &["evaluate", "--family", "rf", "--regime", "both", "--folds", "2"],
    );
    assert_code(&out, 0);
    assert!(d.join("reports/report.json").exists());
    assert!(d.join("reports/w200/table_accuracy_all.csv").exists());
    assert!(d.join("reports/manifest.json").exists());

    let out = eegcolor(d, &["report", "--in", "reports", "--out", "summary.txt"]);
    assert_code(&out, 0);
    let summary = std::fs::read_to_string(d.join("summary.txt")).unwrap();
    assert!(summary.contains("best cell by mean accuracy"));
    // Cells render as `mean (std)` with three decimals.
    let stdout = String::from_utf8_lossy(&out.stdout);
    let has_cell = stdout
        .lines()
        .any(|l| l.contains("avg_subject") && l.contains(" (0."));
    assert!(has_cell, "no formatted cell in:\n{stdout}");
}

#[test]
fn unknown_flag_exits_one_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let out = eegcolor(dir.path(), &["synth", "--frobnicate", "1"]);
    assert_code(&out, 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--frobnicate"), "stderr: {stderr}");
}

#[test]
fn window_outside_allowed_set_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_code(
        &eegcolor(
            d,
            &["synth", "--subjects", "1", "--trials", "1", "--reps", "2", "--out", "data"],
        ),
        0,
    );
    let out = eegcolor(d, &["extract", "--in", "data", "--window", "300"]);
    assert_code(&out, 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--window") && stderr.contains("300"), "stderr: {stderr}");
}

#[test]
fn spectrogram_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_code(
        &eegcolor(
            d,
            &["synth", "--subjects", "1", "--trials", "1", "--reps", "2", "--out", "data"],
        ),
        0,
    );
    assert_code(
        &eegcolor(
            d,
            &[
                "ingest", "--recording", "data/s01_t01_recording.csv", "--schedule",
                "data/s01_t01_schedule.csv", "--subject", "1", "--trial", "1", "--out",
                "epochs.csv",
            ],
        ),
        0,
    );
    assert!(d.join("epochs.csv.manifest.json").exists());
    let out = eegcolor(
        d,
        &[
            "spectrogram", "--epochs", "epochs.csv", "--epoch", "0", "--channel", "AF7",
            "--out", "spec.csv",
        ],
    );
    assert_code(&out, 0);
    let text = std::fs::read_to_string(d.join("spec.csv")).unwrap();
    assert_eq!(text.lines().count(), 24); // header + 23 rows (8..=30 Hz)
    assert!(text.starts_with("hz,0,1,"));

    // Out-of-range epoch index is a validation error.
    let out = eegcolor(
        d,
        &[
            "spectrogram", "--epochs", "epochs.csv", "--epoch", "99", "--channel", "AF7",
            "--out", "x.csv",
        ],
    );
    assert_code(&out, 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--epoch"));
}

#[test]
fn reduce_and_train_produce_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_code(
        &eegcolor(
            d,
            &["synth", "--subjects", "1", "--trials", "1", "--reps", "3", "--out", "data"],
        ),
        0,
    );
    assert_code(&eegcolor(d, &["extract", "--in", "data", "--window", "500"]), 0);

    let out = eegcolor(
        d,
        &[
            "reduce", "--features", "features.csv", "--method", "forward", "--k", "5",
            "--folds", "2", "--out", "subset.txt",
        ],
    );
    assert_code(&out, 0);
    let subset = std::fs::read_to_string(d.join("subset.txt")).unwrap();
    assert_eq!(subset.lines().filter(|l| l.contains("step ")).count(), 5);

    let out = eegcolor(
        d,
        &[
            "reduce", "--features", "features.csv", "--method", "ae", "--k", "10",
            "--epochs", "30", "--out", "ae.json",
        ],
    );
    assert_code(&out, 0);
    assert!(d.join("ae.json").exists());

    // Unknown method names the flag.
    let out = eegcolor(
        d,
        &["reduce", "--features", "features.csv", "--method", "pca", "--out", "x"],
    );
    assert_code(&out, 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--method"));

    let out = eegcolor(
        d,
        &[
            "train", "--features", "features.csv", "--family", "knn", "--grid", "default",
            "--folds", "2", "--out", "model.json",
        ],
    );
    assert_code(&out, 0);
    assert!(d.join("model.json").exists());
    assert!(d.join("model.norm.json").exists());
    assert!(d.join("model.grid_scores.csv").exists());
    let grid = std::fs::read_to_string(d.join("model.grid_scores.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 5); // header + k in 4..=8
    let model_text = std::fs::read_to_string(d.join("model.json")).unwrap();
    let model = serde_json::from_str::<serde_json::Value>(&model_text).unwrap();
    assert_eq!(model["version"], 1);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("run.conf"), "seed = 7\nout = data\n").unwrap();
    let out = eegcolor(
        d,
        &[
            "--config", "run.conf", "synth", "--subjects", "1", "--trials", "1", "--reps",
            "2",
        ],
    );
    assert_code(&out, 0);
    assert!(d.join("data/s01_t01_recording.csv").exists());
    let manifest = std::fs::read_to_string(d.join("data/manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": \"7\""));

    // The flag beats the config entry.
    let out = eegcolor(
        d,
        &[
            "--config", "run.conf", "synth", "--subjects", "1", "--trials", "1", "--reps",
            "2", "--seed", "9", "--out", "data2",
        ],
    );
    assert_code(&out, 0);
    let manifest = std::fs::read_to_string(d.join("data2/manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": \"9\""));
}

#[test]
fn synth_is_reproducible_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for name in ["a", "b"] {
        assert_code(
            &eegcolor(
                d,
                &[
                    "synth", "--seed", "13", "--subjects", "1", "--trials", "1", "--reps",
                    "2", "--out", name,
                ],
            ),
            0,
        );
    }
    let a = std::fs::read(d.join("a/s01_t01_recording.csv")).unwrap();
    let b = std::fs::read(d.join("b/s01_t01_recording.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn evaluate_supports_trial_grouping() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_code(
        &eegcolor(
            d,
            &["synth", "--subjects", "1", "--trials", "2", "--reps", "2", "--out", "data"],
        ),
        0,
    );
    assert_code(&eegcolor(d, &["extract", "--in", "data", "--window", "1000"]), 0);
    let out = eegcolor(
        d,
        &[
            "evaluate", "--family", "knn", "--regime", "intra", "--group-by-trial",
            "--out", "bytrial",
        ],
    );
    assert_code(&out, 0);
    let report = std::fs::read_to_string(d.join("bytrial/report.json")).unwrap();
    // One fold per trial.
    assert!(report.contains("\"folds_per_subject\": 2"), "report: {report}");
}

#[test]
fn runtime_failure_exits_two_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // A recording with no jaw clench marker: parseable, but the run fails.
    std::fs::create_dir(d.join("data")).unwrap();
    let mut rec = String::from("TimeStamp,RAW_TP9,RAW_AF7,RAW_AF8,RAW_TP10,Marker\n");
    for i in 0..600 {
        rec.push_str(&format!("{},1,1,1,1,\n", i as f64 / 256.0));
    }
    std::fs::write(d.join("data/s01_t01_recording.csv"), rec).unwrap();
    std::fs::write(
        d.join("data/s01_t01_schedule.csv"),
        "onset_seconds,label\n0,Red\n",
    )
    .unwrap();
    let out = eegcolor(d, &["extract", "--in", "data", "--window", "200"]);
    assert_code(&out, 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("failure manifest"), "stderr: {stderr}");
    assert!(d.join("data/failure_manifest.json").exists());
}

#[test]
fn experiment_grid_writes_full_report_tree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_code(
        &eegcolor(
            d,
            &["synth", "--subjects", "2", "--trials", "1", "--reps", "2", "--out", "data"],
        ),
        0,
    );
    let out = eegcolor(
        d,
        &[
            "experiment", "--data", "data", "--windows", "200,1000", "--feature-sets",
            "all", "--families", "knn,lr", "--regimes", "intra,inter", "--folds", "2",
            "--jobs", "2", "--seed", "3", "--out", "grid",
        ],
    );
    assert_code(&out, 0);
    for path in [
        "grid/report.json",
        "grid/manifest.json",
        "grid/sweep_intra.csv",
        "grid/sweep_inter.csv",
        "grid/w200/table_accuracy_all.csv",
        "grid/w200/table_auc_all.csv",
        "grid/w200/table_mcc_all.csv",
        "grid/w1000/table_accuracy_all.csv",
    ] {
        assert!(d.join(path).exists(), "missing {path}");
    }
    // ROC files for the best intra cell: 2 subjects x 3 classes.
    let roc_files = std::fs::read_dir(d.join("grid"))
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("roc_")
        })
        .count();
    assert_eq!(roc_files, 6);
}
