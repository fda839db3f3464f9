//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantity. Tolerances are pinned here, not configurable.
//!
//! Run with: cargo test -p eegcolor --test acceptance -- --nocapture

mod common;

use std::time::Instant;

use num_complex::Complex;
use rayon::prelude::*;

use eegcolor::dsp::{cwt_power, default_freq_grid, fft, fft_convolve_same, morlet_wavelet, MorletParams};
use eegcolor::eval::{
    self, binary_auc, binary_auc_rank, multiclass_auc, run_experiment, stratified_kfold,
    CellStats, ConfusionMatrix, ExperimentConfig, FeatureSet, Regime,
};
use eegcolor::features::{
    assemble, correlation_features, feature_names, spectral_features, statistical_features,
    Normalization, PipelineParams, CORRELATION_COUNT, FEATURE_COUNT, SPECTRAL_COUNT,
    STATISTICAL_COUNT,
};
use eegcolor::ingest::{Channel, ClassBandGains, ColorClass};
use eegcolor::models::{self, forest::RfSpec, linear, mlp, ModelFamily, ModelSpec};
use eegcolor::reduce::{autoencoder_train, forward_select, init_autoencoder, AeConfig};
use eegcolor::rng::{derive_seed, Rng};

#[test]
fn acceptance_01_fft_matches_naive_dft() {
    let start = Instant::now();
    let mut rng = Rng::seed_from_u64(1001);
    let mut worst = 0.0f64;
    for &n in &[8usize, 16, 32, 64, 128, 256, 512, 1024] {
        for _ in 0..100 {
            let x: Vec<Complex<f64>> = (0..n)
                .map(|_| Complex::new(rng.normal(), rng.normal()))
                .collect();
            let fast = fft(&x).unwrap();
            let slow = common::naive_dft(&x, false);
            let err = fast
                .iter()
                .zip(&slow)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            worst = worst.max(err);
        }
    }
    let elapsed = start.elapsed();
    assert!(worst < 1e-9, "max abs error {worst}");
    assert!(elapsed.as_secs_f64() < 10.0, "runtime {elapsed:?} exceeds 10 s");
    println!("ACCEPTANCE 1 fft-vs-naive-dft: PASS (max abs err {worst:.3e}, {elapsed:?})");
}

#[test]
fn acceptance_02_cwt_convolution_equivalence_and_spectral_peak() {
    let mut rng = Rng::seed_from_u64(1002);
    let mut worst_rel = 0.0f64;
    for &f in &[8.0, 15.0, 30.0] {
        let signal: Vec<f64> = (0..256).map(|_| rng.normal()).collect();
        let wavelet = morlet_wavelet(&MorletParams::from_cycles(f, 7.0, 256.0)).unwrap();
        let fast = fft_convolve_same(&signal, &wavelet, None).unwrap();
        let direct = common::direct_convolve_same(&signal, &wavelet);
        let peak = direct.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let rel = fast
            .iter()
            .zip(&direct)
            .map(|(a, b)| (a - b).norm() / peak)
            .fold(0.0, f64::max);
        worst_rel = worst_rel.max(rel);
    }
    assert!(worst_rel < 1e-6, "max relative error {worst_rel}");

    let freqs = default_freq_grid();
    for (row, &f0) in freqs.iter().enumerate() {
        let seg: Vec<f64> = (0..512)
            .map(|i| (2.0 * std::f64::consts::PI * f0 * i as f64 / 256.0).sin())
            .collect();
        let spec = cwt_power(&seg, &freqs, 256.0, 7.0, Channel::Tp9).unwrap();
        let avg: Vec<f64> = spec
            .power
            .iter()
            .map(|r| r.iter().sum::<f64>() / r.len() as f64)
            .collect();
        let argmax = avg
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(argmax, row, "peak for {f0} Hz landed on row {argmax}");
    }
    println!(
        "ACCEPTANCE 2 cwt-equivalence-and-peak: PASS (max rel err {worst_rel:.3e}, 23/23 peaks)"
    );
}

#[test]
fn acceptance_03_feature_schema_and_oracles() {
    assert_eq!(FEATURE_COUNT, 86);
    assert_eq!(SPECTRAL_COUNT, 18);
    assert_eq!(CORRELATION_COUNT, 28);
    assert_eq!(STATISTICAL_COUNT, 40);
    assert_eq!(feature_names().len(), 86);

    // Quick schema check on an assembled matrix.
    let epochs = common::build_synthetic_epochs(1, 1, 2, &ClassBandGains::separable(), 1.0, 1003);
    let matrix = assemble(&epochs, &PipelineParams::new(200).unwrap()).unwrap();
    assert!(matrix.rows.iter().all(|r| r.values.len() == 86));

    let mut rng = Rng::seed_from_u64(1003);
    let sr = 256.0;
    let bins = 16;
    // Tolerance scale-aware: mobility values reach ~1e3 (derivatives are
    // scaled by the sample rate), where a fixed 1e-10 would demand more
    // than f64 carries.
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0);
    for _ in 0..1000 {
        let w = common::random_window(51, &mut rng);
        let spectral = spectral_features(&w);
        for s in 0..8 {
            assert!(close(spectral[s], common::oracle_mean(&w.series[s])));
            assert!(close(
                spectral[8 + s],
                common::oracle_population_variance(&w.series[s])
            ));
        }
        for band in 0..2 {
            let left = 0.5
                * (common::oracle_mean(&w.series[band * 4])
                    + common::oracle_mean(&w.series[band * 4 + 1]));
            let right = 0.5
                * (common::oracle_mean(&w.series[band * 4 + 3])
                    + common::oracle_mean(&w.series[band * 4 + 2]));
            assert!(close(spectral[16 + band], (left - right).abs()));
        }
        let corr = correlation_features(&w);
        let mut k = 0;
        for i in 0..8 {
            for j in (i + 1)..8 {
                assert!(close(corr[k], common::oracle_pearson(&w.series[i], &w.series[j])));
                k += 1;
            }
        }
        let stat = statistical_features(&w, sr, bins).unwrap();
        for s in 0..8 {
            assert!(close(stat[s], common::oracle_kurtosis(&w.series[s])));
            assert!(close(stat[8 + s], common::oracle_skewness(&w.series[s])));
            assert!(close(stat[16 + s], common::oracle_entropy(&w.series[s], bins)));
            let (mob, comp) = common::oracle_hjorth(&w.series[s], sr);
            assert!(close(stat[24 + s], mob), "mobility {} vs {}", stat[24 + s], mob);
            assert!(close(stat[32 + s], comp));
        }
    }
    println!("ACCEPTANCE 3 feature-schema-and-oracles: PASS (86 = 18+28+40, 1000 windows within 1e-10)");
}

#[test]
fn acceptance_04_metric_oracles() {
    let mut rng = Rng::seed_from_u64(1004);
    let mut worst = 0.0f64;
    for round in 0..1000 {
        let n = 30 + rng.gen_range(50);
        // Half the rounds quantize scores to force ties.
        let quantize = round % 2 == 0;
        let draw = |rng: &mut Rng| {
            let v = rng.normal();
            if quantize {
                (v * 4.0).round() / 4.0
            } else {
                v
            }
        };
        // Binary: both classes guaranteed.
        let mut y: Vec<bool> = (0..n).map(|_| rng.next_f64() < 0.5).collect();
        y[0] = true;
        y[1] = false;
        let scores: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let trap = binary_auc(&scores, &y).unwrap();
        let rank = binary_auc_rank(&scores, &y).unwrap();
        let pair = common::oracle_auc_pairwise(&scores, &y);
        worst = worst.max((trap - rank).abs()).max((trap - pair).abs());
        assert!((trap - rank).abs() < 1e-12, "trapezoid {trap} vs rank {rank}");
        assert!((trap - pair).abs() < 1e-12, "trapezoid {trap} vs pairwise {pair}");

        // Multiclass: all three classes guaranteed.
        let mut labels: Vec<usize> = (0..n).map(|_| rng.gen_range(3)).collect();
        labels[0] = 0;
        labels[1] = 1;
        labels[2] = 2;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| draw(&mut rng)).collect())
            .collect();
        let m = multiclass_auc(&rows, &labels).unwrap();
        let oracle = common::oracle_multiclass_auc(&rows, &labels, 3);
        worst = worst.max((m - oracle).abs());
        assert!((m - oracle).abs() < 1e-12, "multiclass {m} vs oracle {oracle}");

        // MCC against the direct formula evaluation.
        let preds: Vec<usize> = (0..n).map(|_| rng.gen_range(3)).collect();
        let cm = ConfusionMatrix::from_labels(&labels, &preds, 3).unwrap();
        let ours = eval::mcc(&cm);
        let oracle = common::oracle_mcc(&cm.counts);
        worst = worst.max((ours - oracle).abs());
        assert!((ours - oracle).abs() < 1e-12, "mcc {ours} vs oracle {oracle}");

        // Accuracy against an independent hand count.
        let acc = eval::accuracy(&labels, &preds).unwrap();
        let mut hits = 0usize;
        for (a, b) in labels.iter().zip(&preds) {
            if a == b {
                hits += 1;
            }
        }
        let acc_oracle = hits as f64 / n as f64;
        worst = worst.max((acc - acc_oracle).abs());
        assert!((acc - acc_oracle).abs() < 1e-12);
    }

    // Exact identities.
    let y = vec![true, true, false, false];
    assert_eq!(binary_auc(&[0.9, 0.8, 0.2, 0.1], &y).unwrap(), 1.0);
    assert_eq!(binary_auc(&[0.5, 0.5, 0.5, 0.5], &y).unwrap(), 0.5);
    let labels = vec![0usize, 1, 2, 0, 1, 2];
    let onehot: Vec<Vec<f64>> = labels
        .iter()
        .map(|&c| (0..3).map(|k| if k == c { 1.0 } else { 0.0 }).collect())
        .collect();
    assert_eq!(multiclass_auc(&onehot, &labels).unwrap(), 1.0);
    let flat: Vec<Vec<f64>> = labels.iter().map(|_| vec![0.5; 3]).collect();
    assert_eq!(multiclass_auc(&flat, &labels).unwrap(), 0.5);
    let perfect = ConfusionMatrix::from_labels(&labels, &labels, 3).unwrap();
    assert_eq!(eval::mcc(&perfect), 1.0);
    assert_eq!(eval::accuracy(&labels, &labels).unwrap(), 1.0);

    println!("ACCEPTANCE 4 metric-oracles: PASS (1000 fixtures, max disagreement {worst:.3e})");
}

#[test]
fn acceptance_05_gradient_checks() {
    let h = 1e-5;
    let rel = |fd: f64, g: f64| (fd - g).abs() / fd.abs().max(g.abs()).max(1e-8);

    // Logistic regression (smooth L2 objective).
    let mut rng = Rng::seed_from_u64(1005);
    let x: Vec<Vec<f64>> = (0..5)
        .map(|_| (0..4).map(|_| rng.normal()).collect())
        .collect();
    let y = vec![0usize, 1, 2, 1, 0];
    let mut weights: Vec<f64> = (0..3 * 5).map(|_| 0.3 * rng.normal()).collect();
    let (_, grad) = linear::lr_loss_grad(&weights, &x, &y, 0.01);
    let mut lr_worst = 0.0f64;
    for i in 0..weights.len() {
        let orig = weights[i];
        weights[i] = orig + h;
        let (lp, _) = linear::lr_loss_grad(&weights, &x, &y, 0.01);
        weights[i] = orig - h;
        let (lm, _) = linear::lr_loss_grad(&weights, &x, &y, 0.01);
        weights[i] = orig;
        lr_worst = lr_worst.max(rel((lp - lm) / (2.0 * h), grad[i]));
    }
    assert!(lr_worst < 1e-4, "LR max relative error {lr_worst}");

    // MLP.
    let spec = mlp::MlpSpec {
        hidden: (6, 4),
        l2: 1e-3,
        seed: 5,
        ..mlp::MlpSpec::default()
    };
    let model = mlp::init_model(&spec, 4);
    let (_, grads) = model.loss_and_grad(&x, &y);
    let mut mlp_worst = 0.0f64;
    for layer in 0..3 {
        for wi in 0..model.layers[layer].weights.len() {
            let mut plus = model.clone();
            plus.layers[layer].weights[wi] += h;
            let mut minus = model.clone();
            minus.layers[layer].weights[wi] -= h;
            let fd = (plus.loss_and_grad(&x, &y).0 - minus.loss_and_grad(&x, &y).0) / (2.0 * h);
            mlp_worst = mlp_worst.max(rel(fd, grads.layers[layer].0[wi]));
        }
    }
    assert!(mlp_worst < 1e-4, "MLP max relative error {mlp_worst}");

    // Autoencoder.
    let cfg = AeConfig {
        hidden: 6,
        latent: 3,
        seed: 7,
        ..AeConfig::default()
    };
    let batch: Vec<Vec<f64>> = (0..5)
        .map(|_| (0..8).map(|_| rng.normal()).collect())
        .collect();
    let ae = init_autoencoder(&cfg, 8);
    let (_, ae_grads) = ae.loss_and_grad(&batch);
    let mut ae_worst = 0.0f64;
    for li in 0..ae.layers.len() {
        for wi in 0..ae.layers[li].weights.len() {
            let mut plus = ae.clone();
            plus.layers[li].weights[wi] += h;
            let mut minus = ae.clone();
            minus.layers[li].weights[wi] -= h;
            let fd = (plus.loss_and_grad(&batch).0 - minus.loss_and_grad(&batch).0) / (2.0 * h);
            ae_worst = ae_worst.max(rel(fd, ae_grads.layers[li].0[wi]));
        }
    }
    assert!(ae_worst < 1e-4, "autoencoder max relative error {ae_worst}");

    println!(
        "ACCEPTANCE 5 gradient-checks: PASS (rel err LR {lr_worst:.2e}, MLP {mlp_worst:.2e}, AE {ae_worst:.2e})"
    );
}

#[test]
fn acceptance_06_end_to_end_synthetic_separability() {
    let start = Instant::now();
    // 3 classes, 8 synthetic subjects, class-dependent band gains, unit
    // noise; two 20-repetition trials per subject.
    let epochs = common::build_synthetic_epochs(8, 2, 20, &ClassBandGains::separable(), 1.0, 1006);
    let mut params = PipelineParams::new(200).unwrap();
    params.jobs = 2;
    let matrix = assemble(&epochs, &params).unwrap();

    let rf = |seed: u64| {
        ModelSpec::RandomForest(RfSpec {
            n_estimators: 100,
            seed,
            ..RfSpec::default()
        })
    };
    // Per-subject stratified 5-fold CV with all 86 features.
    let run_cv = |rows: &[usize], labels: &[ColorClass], spec: &ModelSpec, seed: u64| -> (f64, f64) {
        let folds = stratified_kfold(labels, 5, seed).unwrap();
        let mut accs = Vec::new();
        let mut mccs = Vec::new();
        for (f, valid_local) in folds.iter().enumerate() {
            let vset: std::collections::HashSet<usize> = valid_local.iter().copied().collect();
            let train_local: Vec<usize> =
                (0..rows.len()).filter(|i| !vset.contains(i)).collect();
            let norm = Normalization::fit(
                train_local.iter().map(|&i| matrix.rows[rows[i]].values.as_slice()),
            );
            let tx: Vec<Vec<f64>> = train_local
                .iter()
                .map(|&i| norm.apply(&matrix.rows[rows[i]].values))
                .collect();
            let ty: Vec<ColorClass> = train_local.iter().map(|&i| labels[i]).collect();
            let vx: Vec<Vec<f64>> = valid_local
                .iter()
                .map(|&i| norm.apply(&matrix.rows[rows[i]].values))
                .collect();
            let vy: Vec<ColorClass> = valid_local.iter().map(|&i| labels[i]).collect();
            let model = models::fit(&spec.with_seed(derive_seed(seed, &[f as u64])), &tx, &ty).unwrap();
            let pred = model.predict(&vx).unwrap();
            accs.push(eval::accuracy(&vy, &pred).unwrap());
            let vy_idx: Vec<usize> = vy.iter().map(|c| c.index()).collect();
            let p_idx: Vec<usize> = pred.iter().map(|c| c.index()).collect();
            let cm = ConfusionMatrix::from_labels(&vy_idx, &p_idx, 3).unwrap();
            mccs.push(eval::mcc(&cm));
        }
        (
            accs.iter().sum::<f64>() / accs.len() as f64,
            mccs.iter().sum::<f64>() / mccs.len() as f64,
        )
    };

    let mut subject_accs = Vec::new();
    for subject in 1..=8u32 {
        let rows: Vec<usize> = (0..matrix.rows.len())
            .filter(|&r| matrix.rows[r].subject_id == subject)
            .collect();
        let labels: Vec<ColorClass> = rows.iter().map(|&r| matrix.rows[r].label).collect();
        let (acc, _) = run_cv(&rows, &labels, &rf(subject as u64), 500 + subject as u64);
        subject_accs.push(acc);
    }
    let mean_acc = subject_accs.iter().sum::<f64>() / subject_accs.len() as f64;
    assert!(
        mean_acc >= 0.90,
        "intra-subject 5-fold accuracy {mean_acc} (per subject {subject_accs:?})"
    );

    // Label-shuffled control on subject 1: chance-level accuracy and MCC.
    let rows: Vec<usize> = (0..matrix.rows.len())
        .filter(|&r| matrix.rows[r].subject_id == 1)
        .collect();
    let base_labels: Vec<ColorClass> = rows.iter().map(|&r| matrix.rows[r].label).collect();
    let shuffle_spec = ModelSpec::RandomForest(RfSpec {
        n_estimators: 50,
        ..RfSpec::default()
    });
    let results: Vec<(f64, f64)> = (0..20u64)
        .into_par_iter()
        .map(|s| {
            let mut labels = base_labels.clone();
            let mut rng = Rng::seed_from_u64(derive_seed(7007, &[s]));
            rng.shuffle(&mut labels);
            run_cv(&rows, &labels, &shuffle_spec, derive_seed(9009, &[s]))
        })
        .collect();
    let mean_shuffle_acc = results.iter().map(|r| r.0).sum::<f64>() / results.len() as f64;
    let mean_shuffle_mcc = results.iter().map(|r| r.1).sum::<f64>() / results.len() as f64;
    assert!(
        (mean_shuffle_acc - 1.0 / 3.0).abs() <= 0.05,
        "shuffled accuracy {mean_shuffle_acc}"
    );
    assert!(mean_shuffle_mcc.abs() <= 0.05, "shuffled MCC {mean_shuffle_mcc}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "runtime {elapsed:?} exceeds 5 minutes");
    println!(
        "ACCEPTANCE 6 end-to-end-separability: PASS (RF accuracy {mean_acc:.3}, shuffled {mean_shuffle_acc:.3}, MCC {mean_shuffle_mcc:+.3}, {elapsed:?})"
    );
}

#[test]
fn acceptance_07_forward_selection_recovery() {
    let wrapper = ModelSpec::LogisticRegression(linear::LrSpec {
        max_iter: 60,
        tol: 1e-5,
        ..linear::LrSpec::default()
    });
    let mut recovered: Vec<usize> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            // Fresh fixture per seed: 10 informative + 76 noise columns.
            let mut rng = Rng::seed_from_u64(derive_seed(1007, &[seed]));
            let mut x = Vec::new();
            let mut y = Vec::new();
            for class in 0..3usize {
                for _ in 0..40 {
                    let mut row = Vec::with_capacity(86);
                    for j in 0..86 {
                        if j < 10 {
                            let offset = match (class + j) % 3 {
                                0 => -1.2,
                                1 => 0.0,
                                _ => 1.2,
                            };
                            row.push(offset + 0.45 * rng.normal());
                        } else {
                            row.push(rng.normal());
                        }
                    }
                    x.push(row);
                    y.push(ColorClass::from_index(class).unwrap());
                }
            }
            let subset = forward_select(&x, &y, &wrapper, 10, 3, seed).unwrap();
            subset.indices.iter().filter(|&&i| i < 10).count()
        })
        .collect();
    recovered.sort_unstable();
    let median = recovered[recovered.len() / 2];
    assert!(
        median >= 7,
        "median informative columns in top-10 is {median} (runs: {recovered:?})"
    );
    println!(
        "ACCEPTANCE 7 forward-selection-recovery: PASS (median {median}/10 informative, runs {recovered:?})"
    );
}

#[test]
fn acceptance_08_autoencoder_reconstruction() {
    let epochs = common::build_synthetic_epochs(2, 1, 6, &ClassBandGains::separable(), 1.0, 1008);
    let matrix = assemble(&epochs, &PipelineParams::new(200).unwrap()).unwrap();
    let norm = Normalization::fit(matrix.rows.iter().map(|r| r.values.as_slice()));
    let x: Vec<Vec<f64>> = matrix.rows.iter().map(|r| norm.apply(&r.values)).collect();
    let cfg = AeConfig {
        epochs: 150,
        seed: 3,
        ..AeConfig::default()
    };
    let model = autoencoder_train(&x, &cfg).unwrap();
    // The column-mean predictor scores exactly 1.0 on z-scored data.
    assert!(
        model.final_mse < 1.0,
        "reconstruction MSE {} not below mean-predictor baseline",
        model.final_mse
    );
    let encoded = model.encode(&x).unwrap();
    assert!(encoded.iter().all(|r| r.len() == 10));
    println!(
        "ACCEPTANCE 8 autoencoder-baseline: PASS (final MSE {:.4} < 1.0, latent width 10)",
        model.final_mse
    );
}

#[test]
fn acceptance_09_experiment_determinism() {
    let epochs = common::build_synthetic_epochs(2, 1, 3, &ClassBandGains::separable(), 1.0, 1009);
    let cfg = |jobs: usize| ExperimentConfig {
        windows_ms: vec![200],
        feature_sets: FeatureSet::ALL_SETS.to_vec(),
        families: vec![ModelFamily::Knn, ModelFamily::RandomForest],
        regimes: vec![Regime::Intra, Regime::Inter],
        folds: 2,
        jobs,
        seed: 42,
        model_overrides: vec![ModelSpec::RandomForest(RfSpec {
            n_estimators: 20,
            ..RfSpec::default()
        })],
        ae: AeConfig {
            epochs: 50,
            ..AeConfig::default()
        },
        ..ExperimentConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let runs = [
        (dir.path().join("a"), 2),
        (dir.path().join("b"), 2),
        (dir.path().join("c"), 1),
    ];
    for (path, jobs) in &runs {
        run_experiment(&epochs, &cfg(*jobs), Some(path)).unwrap();
    }
    let collect = |root: &std::path::Path| -> Vec<(String, Vec<u8>)> {
        let mut files = Vec::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(d) = stack.pop() {
            for entry in std::fs::read_dir(&d).unwrap() {
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
    let a = collect(&runs[0].0);
    let b = collect(&runs[1].0);
    let c = collect(&runs[2].0);
    assert!(!a.is_empty());
    assert_eq!(a, b, "repeat run with jobs=2 differs");
    assert_eq!(a, c, "jobs=2 differs from jobs=1");
    println!(
        "ACCEPTANCE 9 experiment-determinism: PASS ({} files byte-identical across runs and worker counts)",
        a.len()
    );
}

#[test]
fn acceptance_10_full_window_grid() {
    let start = Instant::now();
    let epochs = common::build_synthetic_epochs(2, 2, 2, &ClassBandGains::separable(), 1.0, 1010);
    let cfg = ExperimentConfig {
        windows_ms: vec![100, 200, 500, 1000],
        feature_sets: FeatureSet::ALL_SETS.to_vec(),
        families: ModelFamily::ALL.to_vec(),
        regimes: vec![Regime::Intra, Regime::Inter],
        folds: 2,
        jobs: 2,
        seed: 7,
        model_overrides: vec![
            ModelSpec::RandomForest(RfSpec {
                n_estimators: 30,
                ..RfSpec::default()
            }),
            ModelSpec::GradientBoosting(eegcolor::models::boost::GbSpec {
                n_estimators: 30,
                ..Default::default()
            }),
            ModelSpec::Mlp(mlp::MlpSpec {
                epochs: 40,
                ..mlp::MlpSpec::default()
            }),
        ],
        ae: AeConfig {
            epochs: 100,
            ..AeConfig::default()
        },
        emit_roc: true,
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&epochs, &cfg, None).unwrap();
    assert_eq!(report.cells.len(), 4 * 3 * 2 * 6, "cell count");
    for cell in &report.cells {
        let finite = match &cell.stats {
            CellStats::Intra { accuracy, auc, mcc, subjects, .. } => {
                assert_eq!(*subjects, 2);
                [accuracy.avg, accuracy.best, auc.avg, auc.best, mcc.avg, mcc.best]
                    .iter()
                    .all(|m| m.mean.is_finite() && m.std.is_finite())
            }
            CellStats::Inter { accuracy, auc, mcc, subjects } => {
                assert_eq!(*subjects, 2);
                [accuracy, auc, mcc].iter().all(|m| m.mean.is_finite() && m.std.is_finite())
            }
        };
        assert!(finite, "non-finite metrics in cell {cell:?}");
    }
    let elapsed = start.elapsed();
    println!(
        "ACCEPTANCE 10 full-window-grid: PASS (4x3x2x6 = {} cells, {elapsed:?})",
        report.cells.len()
    );
}
