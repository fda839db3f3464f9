//! Command implementations. Validation failures (bad flag values) surface as
//! `CliError::Validation` naming the flag; anything that fails mid-run writes
//! a failure manifest and surfaces as `CliError::Runtime`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use eegcolor::dsp;
use eegcolor::eval::{
    run_experiment, run_experiment_on_matrices, CellStats, CvGrouping, ExperimentConfig,
    ExperimentReport, FeatureSet, Regime,
};
use eegcolor::features::{
    assemble, feature_matrix_csv, parse_feature_matrix_csv, ArtifactThreshold, Normalization,
    PipelineParams, FEATURE_NAME_MANIFEST_V1,
};
use eegcolor::ingest::{
    self, detect_start_marker, epoch_trials, epochs_csv, generate_synthetic_recording,
    parse_epochs_csv, parse_recording, parse_schedule, serialize_recording, serialize_schedule,
    Channel, ClassBandGains, ColorClass, EpochedTrial, StimulusProtocol, StimulusSchedule,
};
use eegcolor::models::{self, ModelFamily, ModelSpec};
use eegcolor::reduce::{autoencoder_to_json, autoencoder_train, forward_select, AeConfig};
use eegcolor::rng::derive_seed;

use crate::manifest::{resolve, runtime_error, Config, Manifest};
use crate::{
    CliError, CliResult, EvaluateArgs, ExperimentArgs, ExtractArgs, IngestArgs, ReduceArgs,
    ReportArgs, SpectrogramArgs, SynthArgs, TrainArgs,
};

fn validation(message: impl Into<String>) -> CliError {
    CliError::Validation(message.into())
}

fn read_file(path: &Path, flag: &str) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| validation(format!("{flag} {}: {e}", path.display())))
}

fn parse_gain_pair(raw: &str, flag: &str) -> CliResult<(f64, f64)> {
    let parts: Vec<&str> = raw.split(',').collect();
    let bad = || validation(format!("{flag}: expected `alpha,beta`, got {raw:?}"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    if a < 0.0 || b < 0.0 {
        return Err(validation(format!("{flag}: gains must be nonnegative")));
    }
    Ok((a, b))
}

fn parse_artifact(raw: &str) -> CliResult<ArtifactThreshold> {
    if raw.eq_ignore_ascii_case("auto") {
        return Ok(ArtifactThreshold::Auto);
    }
    match raw.parse::<f64>() {
        Ok(v) if v > 0.0 => Ok(ArtifactThreshold::Fixed(v)),
        _ => Err(validation(format!(
            "--artifact-threshold: expected a positive number or `auto`, got {raw:?}"
        ))),
    }
}

fn parse_family(raw: &str) -> CliResult<ModelFamily> {
    ModelFamily::parse_tag(raw).ok_or_else(|| {
        validation(format!(
            "--family: unknown family {raw:?} (use knn, svm, lr, rf, mlp or gb)"
        ))
    })
}

fn recording_name(subject: u32, trial: u32) -> String {
    format!("s{subject:02}_t{trial:02}_recording.csv")
}

fn schedule_name(subject: u32, trial: u32) -> String {
    format!("s{subject:02}_t{trial:02}_schedule.csv")
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

pub fn synth(args: SynthArgs, config: &Config) -> CliResult<()> {
    let seed = resolve(args.seed, config, "seed", 0)?;
    let out = match args.out {
        Some(out) => out,
        None => PathBuf::from(
            config
                .get("out")
                .ok_or_else(|| validation("--out: output directory is required"))?,
        ),
    };
    let red = parse_gain_pair(&args.gain_red, "--gain-red")?;
    let green = parse_gain_pair(&args.gain_green, "--gain-green")?;
    let blue = parse_gain_pair(&args.gain_blue, "--gain-blue")?;
    if args.noise_sigma < 0.0 {
        return Err(validation("--noise-sigma: must be nonnegative"));
    }
    let gains = ClassBandGains {
        gains: [red, green, blue],
    };
    let protocol = StimulusProtocol::with_repetitions(args.reps);
    protocol
        .validate()
        .map_err(|e| validation(format!("--reps: {e}")))?;

    std::fs::create_dir_all(&out)
        .map_err(|e| validation(format!("--out {}: {e}", out.display())))?;
    for subject in 1..=args.subjects {
        for trial in 1..=args.trials {
            let tags = [subject as u64, trial as u64];
            let schedule =
                StimulusSchedule::randomized(&protocol, derive_seed(seed, &[tags[0], tags[1], 0]))
                    .map_err(|e| runtime_error(e.to_string(), &out))?;
            let (rec, schedule) = generate_synthetic_recording(
                derive_seed(seed, &[tags[0], tags[1], 1]),
                schedule,
                &gains,
                args.noise_sigma,
            );
            let rec_path = out.join(recording_name(subject, trial));
            std::fs::write(&rec_path, serialize_recording(&rec))
                .map_err(|e| runtime_error(format!("writing {}: {e}", rec_path.display()), &out))?;
            let sched_path = out.join(schedule_name(subject, trial));
            std::fs::write(&sched_path, serialize_schedule(&schedule)).map_err(|e| {
                runtime_error(format!("writing {}: {e}", sched_path.display()), &out)
            })?;
        }
    }
    Manifest::new("synth")
        .arg("seed", seed)
        .arg("subjects", args.subjects)
        .arg("trials", args.trials)
        .arg("reps", args.reps)
        .arg("noise_sigma", args.noise_sigma)
        .arg("gain_red", &args.gain_red)
        .arg("gain_green", &args.gain_green)
        .arg("gain_blue", &args.gain_blue)
        .arg("out", out.display())
        .write_to_dir(&out)?;
    println!(
        "wrote {} recording/schedule pairs to {}",
        args.subjects * args.trials,
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

fn load_epochs_for(
    recording: &Path,
    schedule: &Path,
    subject: u32,
    trial: u32,
) -> CliResult<Vec<EpochedTrial>> {
    let rec_text = read_file(recording, "--recording")?;
    let sched_text = read_file(schedule, "--schedule")?;
    let out_dir = recording.parent().unwrap_or(Path::new("."));
    let rec = parse_recording(&rec_text)
        .map_err(|e| runtime_error(format!("{}: {e}", recording.display()), out_dir))?;
    let sched = parse_schedule(&sched_text)
        .map_err(|e| runtime_error(format!("{}: {e}", schedule.display()), out_dir))?;
    let start = detect_start_marker(&rec)
        .map_err(|e| runtime_error(format!("{}: {e}", recording.display()), out_dir))?;
    epoch_trials(&rec, &sched, start, subject, trial)
        .map_err(|e| runtime_error(format!("{}: {e}", recording.display()), out_dir))
}

pub fn ingest(args: IngestArgs, _config: &Config) -> CliResult<()> {
    let epochs = load_epochs_for(&args.recording, &args.schedule, args.subject, args.trial)?;
    let out_dir = args.out.parent().unwrap_or(Path::new(".")).to_path_buf();
    std::fs::write(&args.out, epochs_csv(&epochs))
        .map_err(|e| runtime_error(format!("writing {}: {e}", args.out.display()), &out_dir))?;
    Manifest::new("ingest")
        .arg("recording", args.recording.display())
        .arg("schedule", args.schedule.display())
        .arg("subject", args.subject)
        .arg("trial", args.trial)
        .arg("out", args.out.display())
        .write_for_file(&args.out)?;
    println!("wrote {} epochs to {}", epochs.len(), args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

/// Finds sNN_tMM_recording.csv pairs under `dir`, sorted by (subject, trial).
fn discover_recordings(dir: &Path) -> CliResult<Vec<(u32, u32, PathBuf, PathBuf)>> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| validation(format!("--in {}: {e}", dir.display())))?;
    let mut found = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| validation(format!("--in {}: {e}", dir.display())))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(stem) = name.strip_suffix("_recording.csv") else {
            continue;
        };
        // Pattern sNN_tMM.
        let parts: Vec<&str> = stem.splitn(2, '_').collect();
        if parts.len() != 2 {
            continue;
        }
        let (Some(s), Some(t)) = (parts[0].strip_prefix('s'), parts[1].strip_prefix('t')) else {
            continue;
        };
        let (Ok(subject), Ok(trial)) = (s.parse::<u32>(), t.parse::<u32>()) else {
            continue;
        };
        let schedule = dir.join(schedule_name(subject, trial));
        if !schedule.exists() {
            return Err(validation(format!(
                "--in: {} has no matching schedule {}",
                name,
                schedule.display()
            )));
        }
        found.push((subject, trial, entry.path(), schedule));
    }
    if found.is_empty() {
        return Err(validation(format!(
            "--in {}: no sNN_tMM_recording.csv files found",
            dir.display()
        )));
    }
    found.sort();
    Ok(found)
}

pub fn extract(args: ExtractArgs, config: &Config) -> CliResult<()> {
    let window = resolve(args.window, config, "window", 200)?;
    let out = resolve(args.out, config, "out", PathBuf::from("features.csv"))?;
    let artifact_raw = resolve(
        args.artifact_threshold,
        config,
        "artifact-threshold",
        "auto".to_string(),
    )?;
    let n_cycles = resolve(args.n_cycles, config, "n-cycles", 7.0)?;
    let mut params = PipelineParams::new(window).map_err(|e| validation(format!("--window: {e}")))?;
    params.artifact = parse_artifact(&artifact_raw)?;
    params.n_cycles = n_cycles;

    let pairs = discover_recordings(&args.input)?;
    let mut epochs = Vec::new();
    for (subject, trial, recording, schedule) in &pairs {
        epochs.extend(load_epochs_for(recording, schedule, *subject, *trial)?);
    }
    let out_dir = out.parent().unwrap_or(Path::new(".")).to_path_buf();
    let matrix =
        assemble(&epochs, &params).map_err(|e| runtime_error(e.to_string(), &out_dir))?;
    std::fs::write(&out, feature_matrix_csv(&matrix))
        .map_err(|e| runtime_error(format!("writing {}: {e}", out.display()), &out_dir))?;
    // Ship the versioned feature-name manifest next to the matrix.
    let names_path = out.with_file_name("feature_names_v1.txt");
    std::fs::write(&names_path, FEATURE_NAME_MANIFEST_V1)
        .map_err(|e| runtime_error(format!("writing {}: {e}", names_path.display()), &out_dir))?;
    Manifest::new("extract")
        .arg("in", args.input.display())
        .arg("window", window)
        .arg("artifact_threshold", &artifact_raw)
        .arg("n_cycles", n_cycles)
        .arg("out", out.display())
        .arg("recordings", pairs.len())
        .arg("rows", matrix.rows.len())
        .arg("dropped_windows", matrix.dropped_windows)
        .write_for_file(&out)?;
    println!(
        "wrote {} feature rows ({} epochs, {} dropped windows) to {}",
        matrix.rows.len(),
        epochs.len(),
        matrix.dropped_windows,
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// spectrogram
// ---------------------------------------------------------------------------

pub fn spectrogram(args: SpectrogramArgs, config: &Config) -> CliResult<()> {
    let n_cycles = resolve(args.n_cycles, config, "n-cycles", 7.0)?;
    let channel: Channel = args
        .channel
        .parse()
        .map_err(|e: String| validation(format!("--channel: {e}")))?;
    let text = read_file(&args.epochs, "--epochs")?;
    let out_dir = args.out.parent().unwrap_or(Path::new(".")).to_path_buf();
    let epochs =
        parse_epochs_csv(&text).map_err(|e| runtime_error(e.to_string(), &out_dir))?;
    let epoch = epochs.get(args.epoch).ok_or_else(|| {
        validation(format!(
            "--epoch: index {} out of range ({} epochs in file)",
            args.epoch,
            epochs.len()
        ))
    })?;
    // Same demeaning as the feature pipeline, so the figure shows band
    // structure rather than the ADC offset's edge response.
    let segment = &epoch.channel_segments[channel.index()];
    let mean = segment.iter().sum::<f64>() / segment.len() as f64;
    let centered: Vec<f64> = segment.iter().map(|v| v - mean).collect();
    let spec = dsp::cwt_power(
        &centered,
        &dsp::default_freq_grid(),
        ingest::SAMPLE_RATE,
        n_cycles,
        channel,
    )
    .map_err(|e| runtime_error(e.to_string(), &out_dir))?;
    dsp::emit_spectrogram(&spec, &args.out)
        .map_err(|e| runtime_error(format!("writing {}: {e}", args.out.display()), &out_dir))?;
    Manifest::new("spectrogram")
        .arg("epochs", args.epochs.display())
        .arg("epoch", args.epoch)
        .arg("channel", channel)
        .arg("n_cycles", n_cycles)
        .arg("out", args.out.display())
        .write_for_file(&args.out)?;
    println!(
        "wrote {} x {} spectrogram to {}",
        spec.freqs.len(),
        spec.times.len(),
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// reduce
// ---------------------------------------------------------------------------

fn load_features(path: &Path, flag: &str) -> CliResult<eegcolor::FeatureMatrix> {
    let text = read_file(path, flag)?;
    parse_feature_matrix_csv(&text)
        .map_err(|e| validation(format!("{flag} {}: {e}", path.display())))
}

pub fn reduce(args: ReduceArgs, config: &Config) -> CliResult<()> {
    let folds = resolve(args.folds, config, "folds", 3)?;
    let seed = resolve(args.seed, config, "seed", 0)?;
    let matrix = load_features(&args.features, "--features")?;
    let out_dir = args.out.parent().unwrap_or(Path::new(".")).to_path_buf();
    // The provided matrix is the training set by contract; standardize it.
    let norm = Normalization::fit(matrix.rows.iter().map(|r| r.values.as_slice()));
    let x: Vec<Vec<f64>> = matrix.rows.iter().map(|r| norm.apply(&r.values)).collect();
    match args.method.as_str() {
        "forward" => {
            let y: Vec<ColorClass> = matrix.rows.iter().map(|r| r.label).collect();
            let wrapper = ModelSpec::LogisticRegression(eegcolor::models::linear::LrSpec {
                max_iter: 100,
                tol: 1e-5,
                ..Default::default()
            });
            let subset = forward_select(&x, &y, &wrapper, args.k, folds, seed)
                .map_err(|e| runtime_error(e.to_string(), &out_dir))?;
            std::fs::write(&args.out, subset.manifest())
                .map_err(|e| runtime_error(format!("writing {}: {e}", args.out.display()), &out_dir))?;
            println!(
                "selected {} features -> {} (final macro-F1 {:.3})",
                subset.indices.len(),
                args.out.display(),
                subset.trace.last().copied().unwrap_or(f64::NAN)
            );
        }
        "ae" => {
            let cfg = AeConfig {
                latent: args.k,
                epochs: args.epochs,
                seed,
                ..AeConfig::default()
            };
            let model = autoencoder_train(&x, &cfg)
                .map_err(|e| runtime_error(e.to_string(), &out_dir))?;
            std::fs::write(&args.out, autoencoder_to_json(&model))
                .map_err(|e| runtime_error(format!("writing {}: {e}", args.out.display()), &out_dir))?;
            println!(
                "trained autoencoder (final MSE {:.4}) -> {}",
                model.final_mse,
                args.out.display()
            );
        }
        other => {
            return Err(validation(format!(
                "--method: expected `forward` or `ae`, got {other:?}"
            )));
        }
    }
    Manifest::new("reduce")
        .arg("features", args.features.display())
        .arg("method", &args.method)
        .arg("k", args.k)
        .arg("folds", folds)
        .arg("seed", seed)
        .arg("out", args.out.display())
        .write_for_file(&args.out)
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

pub fn train(args: TrainArgs, config: &Config) -> CliResult<()> {
    let folds = resolve(args.folds, config, "folds", 5)?;
    let seed = resolve(args.seed, config, "seed", 0)?;
    let family = parse_family(&args.family)?;
    let matrix = load_features(&args.features, "--features")?;
    let out_dir = args.out.parent().unwrap_or(Path::new(".")).to_path_buf();
    let norm = Normalization::fit(matrix.rows.iter().map(|r| r.values.as_slice()));
    let x: Vec<Vec<f64>> = matrix.rows.iter().map(|r| norm.apply(&r.values)).collect();
    let y: Vec<ColorClass> = matrix.rows.iter().map(|r| r.label).collect();

    let (spec, table) = match args.grid.as_str() {
        "default" => {
            let grid = models::default_grid(family);
            let (best, table) = models::grid_search(&grid, &x, &y, folds, seed)
                .map_err(|e| runtime_error(e.to_string(), &out_dir))?;
            (best, Some(table))
        }
        "none" => (ModelSpec::default_for(family).with_seed(seed), None),
        other => {
            return Err(validation(format!(
                "--grid: expected `default` or `none`, got {other:?}"
            )));
        }
    };
    let mut model =
        models::fit(&spec, &x, &y).map_err(|e| runtime_error(e.to_string(), &out_dir))?;
    model.meta.feature_names = eegcolor::features::feature_names().to_vec();
    let norm_path = args.out.with_file_name(format!(
        "{}.norm.json",
        args.out.file_stem().unwrap_or_default().to_string_lossy()
    ));
    model.meta.normalization_id = norm_path
        .file_name()
        .unwrap_or_default()
        .to_string_lossy()
        .into_owned();
    std::fs::write(&args.out, models::model_to_json(&model))
        .map_err(|e| runtime_error(format!("writing {}: {e}", args.out.display()), &out_dir))?;
    std::fs::write(&norm_path, serde_json::to_string_pretty(&norm).unwrap())
        .map_err(|e| runtime_error(format!("writing {}: {e}", norm_path.display()), &out_dir))?;
    if let Some(table) = &table {
        let mut text = String::from("grid_index,spec,mean_accuracy,fold_accuracies\n");
        for (i, score) in table.iter().enumerate() {
            let _ = writeln!(
                text,
                "{i},{:?},{:.6},{}",
                score.spec,
                score.mean_accuracy,
                score
                    .fold_accuracies
                    .iter()
                    .map(|a| format!("{a:.6}"))
                    .collect::<Vec<_>>()
                    .join(";")
            );
        }
        let grid_path = args.out.with_file_name(format!(
            "{}.grid_scores.csv",
            args.out.file_stem().unwrap_or_default().to_string_lossy()
        ));
        std::fs::write(&grid_path, text)
            .map_err(|e| runtime_error(format!("writing {}: {e}", grid_path.display()), &out_dir))?;
    }
    Manifest::new("train")
        .arg("features", args.features.display())
        .arg("family", family.tag())
        .arg("grid", &args.grid)
        .arg("folds", folds)
        .arg("seed", seed)
        .arg("out", args.out.display())
        .arg("spec", format!("{spec:?}"))
        .write_for_file(&args.out)?;
    println!(
        "trained {} on {} rows -> {}",
        family.tag(),
        matrix.rows.len(),
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

fn parse_regimes(raw: &str) -> CliResult<Vec<Regime>> {
    match raw {
        "intra" => Ok(vec![Regime::Intra]),
        "inter" => Ok(vec![Regime::Inter]),
        "both" => Ok(vec![Regime::Intra, Regime::Inter]),
        other => Err(validation(format!(
            "--regime: expected intra, inter or both, got {other:?}"
        ))),
    }
}

pub fn evaluate(args: EvaluateArgs, config: &Config) -> CliResult<()> {
    let folds = resolve(args.folds, config, "folds", 5)?;
    let seed = resolve(args.seed, config, "seed", 0)?;
    let out = resolve(args.out, config, "out", PathBuf::from("reports"))?;
    let family = parse_family(&args.family)?;
    let feature_set = FeatureSet::parse_tag(&args.feature_set).ok_or_else(|| {
        validation(format!(
            "--feature-set: expected all, forward10 or ae10, got {:?}",
            args.feature_set
        ))
    })?;
    let regimes = parse_regimes(&args.regime)?;
    let matrix = load_features(&args.features, "--features")?;
    let cfg = ExperimentConfig {
        windows_ms: vec![args.window],
        feature_sets: vec![feature_set],
        families: vec![family],
        regimes,
        folds,
        seed,
        grouping: if args.group_by_trial {
            CvGrouping::ByTrial
        } else {
            CvGrouping::PooledStratified
        },
        ..ExperimentConfig::default()
    };
    let report = run_experiment_on_matrices(&[matrix], &cfg, Some(&out))
        .map_err(|e| runtime_error(e.to_string(), &out))?;
    Manifest::new("evaluate")
        .arg("features", args.features.display())
        .arg("family", family.tag())
        .arg("feature_set", feature_set.tag())
        .arg("regime", &args.regime)
        .arg("folds", folds)
        .arg("seed", seed)
        .arg("window", args.window)
        .arg("group_by_trial", args.group_by_trial)
        .arg("out", out.display())
        .write_to_dir(&out)?;
    print!("{}", render_summary(&report));
    println!("report files in {}", out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

fn parse_list<T, F: Fn(&str) -> CliResult<T>>(raw: &str, flag: &str, f: F) -> CliResult<Vec<T>> {
    let items: Vec<&str> = raw.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(validation(format!("{flag}: empty list")));
    }
    items.into_iter().map(f).collect()
}

pub fn experiment(args: ExperimentArgs, config: &Config) -> CliResult<()> {
    let folds = resolve(args.folds, config, "folds", 5)?;
    let seed = resolve(args.seed, config, "seed", 0)?;
    let jobs = resolve(
        args.jobs,
        config,
        "jobs",
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    )?;
    let out = resolve(args.out, config, "out", PathBuf::from("reports"))?;
    let artifact_raw = resolve(
        args.artifact_threshold,
        config,
        "artifact-threshold",
        "auto".to_string(),
    )?;
    let n_cycles = resolve(args.n_cycles, config, "n-cycles", 7.0)?;
    let windows = parse_list(&args.windows, "--windows", |s| {
        let w: u32 = s
            .parse()
            .map_err(|_| validation(format!("--windows: bad value {s:?}")))?;
        if !eegcolor::features::ALLOWED_WINDOWS_MS.contains(&w) {
            return Err(validation(format!(
                "--windows: {w} not in {:?}",
                eegcolor::features::ALLOWED_WINDOWS_MS
            )));
        }
        Ok(w)
    })?;
    let feature_sets = parse_list(&args.feature_sets, "--feature-sets", |s| {
        FeatureSet::parse_tag(s)
            .ok_or_else(|| validation(format!("--feature-sets: unknown set {s:?}")))
    })?;
    let families = parse_list(&args.families, "--families", |s| {
        ModelFamily::parse_tag(s)
            .ok_or_else(|| validation(format!("--families: unknown family {s:?}")))
    })?;
    let regimes = parse_list(&args.regimes, "--regimes", |s| match s {
        "intra" => Ok(Regime::Intra),
        "inter" => Ok(Regime::Inter),
        other => Err(validation(format!("--regimes: unknown regime {other:?}"))),
    })?;

    let pairs = discover_recordings(&args.data)?;
    let mut epochs = Vec::new();
    for (subject, trial, recording, schedule) in &pairs {
        epochs.extend(load_epochs_for(recording, schedule, *subject, *trial)?);
    }
    let cfg = ExperimentConfig {
        windows_ms: windows.clone(),
        feature_sets,
        families,
        regimes,
        folds,
        seed,
        jobs,
        n_cycles,
        artifact: parse_artifact(&artifact_raw)?,
        grouping: if args.group_by_trial {
            CvGrouping::ByTrial
        } else {
            CvGrouping::PooledStratified
        },
        emit_roc: !args.no_roc,
        ..ExperimentConfig::default()
    };
    let report = match run_experiment(&epochs, &cfg, Some(&out)) {
        Ok(report) => report,
        Err(eegcolor::eval::EvalError::ExperimentFailed { manifest }) => {
            return Err(CliError::Runtime {
                message: "experiment grid failed; partial results flushed".into(),
                manifest,
            });
        }
        Err(e) => return Err(runtime_error(e.to_string(), &out)),
    };
    Manifest::new("experiment")
        .arg("data", args.data.display())
        .arg("windows", &args.windows)
        .arg("feature_sets", &args.feature_sets)
        .arg("families", &args.families)
        .arg("regimes", &args.regimes)
        .arg("folds", folds)
        .arg("seed", seed)
        .arg("jobs", jobs)
        .arg("artifact_threshold", &artifact_raw)
        .arg("n_cycles", n_cycles)
        .arg("group_by_trial", args.group_by_trial)
        .arg("emit_roc", !args.no_roc)
        .arg("out", out.display())
        .write_to_dir(&out)?;
    println!(
        "evaluated {} cells over {} epochs; report files in {}",
        report.cells.len(),
        epochs.len(),
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

/// Renders per-metric text tables (`mean (std)` cells) plus the best
/// (family, feature set, window) summary line.
pub fn render_summary(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let metric_of = |stats: &CellStats, m: usize| -> Vec<(&'static str, eegcolor::eval::MeanStd)> {
        match stats {
            CellStats::Intra { accuracy, auc, mcc, .. } => {
                let im = [accuracy, auc, mcc][m];
                vec![("avg_subject", im.avg), ("best_subject", im.best)]
            }
            CellStats::Inter { accuracy, auc, mcc, .. } => {
                let ms = [accuracy, auc, mcc][m];
                vec![("inter_subject", *ms)]
            }
        }
    };
    for &window in &report.windows_ms {
        for &fset in &report.feature_sets {
            for (m, metric) in ["accuracy", "roc_auc", "mcc"].iter().enumerate() {
                let _ = writeln!(out, "== {metric} | window {window} ms | features {} ==", fset.tag());
                let mut header = format!("{:<14}", "row");
                for family in &report.families {
                    let _ = write!(header, "{:<16}", family.tag());
                }
                let _ = writeln!(out, "{header}");
                for row_name in ["avg_subject", "best_subject", "inter_subject"] {
                    let mut cells = Vec::new();
                    for &family in &report.families {
                        for cell in report.cells.iter().filter(|c| {
                            c.window_ms == window && c.feature_set == fset && c.family == family
                        }) {
                            for (name, ms) in metric_of(&cell.stats, m) {
                                if name == row_name {
                                    cells.push(eegcolor::eval::format_cell(ms));
                                }
                            }
                        }
                    }
                    if !cells.is_empty() {
                        let mut line = format!("{row_name:<14}");
                        for cell in cells {
                            let _ = write!(line, "{cell:<16}");
                        }
                        let _ = writeln!(out, "{line}");
                    }
                }
                out.push('\n');
            }
        }
    }
    // Best cell by mean accuracy: intra average when present, else inter.
    let mut best: Option<(f64, &eegcolor::eval::CellReport)> = None;
    for cell in &report.cells {
        let acc = match &cell.stats {
            CellStats::Intra { accuracy, .. } => accuracy.avg.mean,
            CellStats::Inter { accuracy, .. } => accuracy.mean,
        };
        let is_intra = matches!(cell.stats, CellStats::Intra { .. });
        let has_intra = report.regimes.contains(&Regime::Intra);
        if has_intra && !is_intra {
            continue;
        }
        if best.map(|(b, _)| acc > b).unwrap_or(true) {
            best = Some((acc, cell));
        }
    }
    if let Some((acc, cell)) = best {
        let _ = writeln!(
            out,
            "best cell by mean accuracy: {} with {} features at {} ms ({:.3})",
            cell.family.tag(),
            cell.feature_set.tag(),
            cell.window_ms,
            acc
        );
    }
    out
}

pub fn report(args: ReportArgs, _config: &Config) -> CliResult<()> {
    let path = args.input.join("report.json");
    let text = read_file(&path, "--in")?;
    let report: ExperimentReport = serde_json::from_str(&text)
        .map_err(|e| validation(format!("--in {}: {e}", path.display())))?;
    if report.cells.is_empty() {
        return Err(validation(format!(
            "--in {}: report contains no cells",
            path.display()
        )));
    }
    let summary = render_summary(&report);
    print!("{summary}");
    if let Some(out) = &args.out {
        let out_dir = out.parent().unwrap_or(Path::new(".")).to_path_buf();
        std::fs::write(out, &summary)
            .map_err(|e| runtime_error(format!("writing {}: {e}", out.display()), &out_dir))?;
        println!("summary written to {}", out.display());
    }
    Ok(())
}
