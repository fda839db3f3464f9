//! The experiment grid: (window x feature set x regime x family) cells, each
//! evaluated by cross-validation with split-wise normalization, feature
//! selection and autoencoder training (no leakage), and written out as
//! report tables, window sweeps and ROC curve files.
//!
//! Every job derives its seeds from (master seed, window, regime, subject,
//! fold), so results are byte-identical regardless of worker count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    accuracy, loso_split, mcc, multiclass_auc, roc_curve, stratified_kfold, ConfusionMatrix,
    EvalError, RocCurve,
};
use crate::features::{
    assemble, ArtifactThreshold, FeatureMatrix, Normalization, PipelineParams,
};
use crate::ingest::{ColorClass, EpochedTrial};
use crate::models::{self, ModelFamily, ModelSpec};
use crate::reduce::{autoencoder_train, forward_select, AeConfig};
use crate::rng::derive_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Intra,
    Inter,
}

impl Regime {
    pub fn tag(self) -> &'static str {
        match self {
            Regime::Intra => "intra",
            Regime::Inter => "inter",
        }
    }

    fn seed_tag(self) -> u64 {
        match self {
            Regime::Intra => 0,
            Regime::Inter => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSet {
    All,
    Forward10,
    Ae10,
}

impl FeatureSet {
    pub const ALL_SETS: [FeatureSet; 3] = [FeatureSet::All, FeatureSet::Forward10, FeatureSet::Ae10];

    pub fn tag(self) -> &'static str {
        match self {
            FeatureSet::All => "all",
            FeatureSet::Forward10 => "forward10",
            FeatureSet::Ae10 => "ae10",
        }
    }

    pub fn parse_tag(s: &str) -> Option<FeatureSet> {
        Self::ALL_SETS.into_iter().find(|f| f.tag() == s)
    }

    fn seed_tag(self) -> u64 {
        match self {
            FeatureSet::All => 0,
            FeatureSet::Forward10 => 1,
            FeatureSet::Ae10 => 2,
        }
    }
}

/// How intra-subject folds are formed: stratified over the subject's pooled
/// windows (default), or one fold per trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CvGrouping {
    PooledStratified,
    ByTrial,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub windows_ms: Vec<u32>,
    pub feature_sets: Vec<FeatureSet>,
    pub families: Vec<ModelFamily>,
    pub regimes: Vec<Regime>,
    pub folds: usize,
    pub seed: u64,
    pub jobs: usize,
    pub n_cycles: f64,
    pub artifact: ArtifactThreshold,
    pub grouping: CvGrouping,
    /// Per-family spec overrides; families not listed use their defaults.
    pub model_overrides: Vec<ModelSpec>,
    /// Wrapper model for forward selection (a small logistic regression by
    /// default; configurable to the downstream family).
    pub select_wrapper: ModelSpec,
    pub select_folds: usize,
    pub select_k: usize,
    pub ae: AeConfig,
    /// Emit ROC curve points for the best intra-subject cell.
    pub emit_roc: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            windows_ms: vec![100, 200, 500, 1000],
            feature_sets: FeatureSet::ALL_SETS.to_vec(),
            families: ModelFamily::ALL.to_vec(),
            regimes: vec![Regime::Intra, Regime::Inter],
            folds: 5,
            seed: 0,
            jobs: 1,
            n_cycles: 7.0,
            artifact: ArtifactThreshold::Auto,
            grouping: CvGrouping::PooledStratified,
            model_overrides: Vec::new(),
            select_wrapper: ModelSpec::LogisticRegression(crate::models::linear::LrSpec {
                max_iter: 100,
                tol: 1e-5,
                ..crate::models::linear::LrSpec::default()
            }),
            select_folds: 3,
            select_k: 10,
            ae: AeConfig::default(),
            emit_roc: true,
        }
    }
}

impl ExperimentConfig {
    pub fn spec_for(&self, family: ModelFamily) -> ModelSpec {
        self.model_overrides
            .iter()
            .find(|s| s.family() == family)
            .cloned()
            .unwrap_or_else(|| ModelSpec::default_for(family))
    }

    fn validate(&self) -> Result<(), EvalError> {
        if self.windows_ms.is_empty()
            || self.feature_sets.is_empty()
            || self.families.is_empty()
            || self.regimes.is_empty()
        {
            return Err(EvalError::BadConfig(
                "windows, feature sets, families and regimes must be nonempty".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

fn mean_std(values: &[f64]) -> MeanStd {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    MeanStd {
        mean,
        std: var.sqrt(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntraMetric {
    /// Mean over subjects of per-subject fold means; std across subjects.
    pub avg: MeanStd,
    /// The best subject for this metric: its fold mean and fold std.
    pub best: MeanStd,
    pub best_subject: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CellStats {
    Intra {
        accuracy: IntraMetric,
        auc: IntraMetric,
        mcc: IntraMetric,
        subjects: usize,
        folds_per_subject: usize,
    },
    Inter {
        accuracy: MeanStd,
        auc: MeanStd,
        mcc: MeanStd,
        subjects: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub window_ms: u32,
    pub feature_set: FeatureSet,
    pub regime: Regime,
    pub family: ModelFamily,
    pub stats: CellStats,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RocEntry {
    pub subject: u32,
    pub class: ColorClass,
    pub curve: RocCurve,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub windows_ms: Vec<u32>,
    pub feature_sets: Vec<FeatureSet>,
    pub families: Vec<ModelFamily>,
    pub regimes: Vec<Regime>,
    pub folds: usize,
    pub seed: u64,
    pub subjects: Vec<u32>,
    pub cells: Vec<CellReport>,
    /// ROC curves for the best intra cell (by average accuracy), if emitted.
    pub roc: Vec<RocEntry>,
    pub roc_cell: Option<(u32, FeatureSet, ModelFamily)>,
    pub dropped_windows: usize,
}

// ---------------------------------------------------------------------------
// Jobs
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
enum JobKind {
    IntraFold { subject: u32, fold: usize },
    LosoSubject { held_out: u32 },
}

#[derive(Clone, Debug)]
struct Job {
    window_idx: usize,
    regime: Regime,
    kind: JobKind,
    train: Vec<usize>,
    valid: Vec<usize>,
    seed: u64,
}

/// Metrics triple [accuracy, auc, mcc] per (feature set, family), flattened
/// feature-set-major.
struct JobOutput {
    metrics: Vec<[f64; 3]>,
    /// (validation labels, per-class scores) for the ROC target, if requested.
    collected: Option<Vec<(ColorClass, [f64; 3])>>,
}

fn intra_folds(
    matrix: &FeatureMatrix,
    subject_rows: &[usize],
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Vec<Vec<usize>>, EvalError> {
    match cfg.grouping {
        CvGrouping::PooledStratified => {
            let labels: Vec<ColorClass> =
                subject_rows.iter().map(|&r| matrix.rows[r].label).collect();
            let local = stratified_kfold(&labels, cfg.folds, seed)?;
            Ok(local
                .into_iter()
                .map(|fold| fold.into_iter().map(|i| subject_rows[i]).collect())
                .collect())
        }
        CvGrouping::ByTrial => {
            let mut by_trial: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
            for &r in subject_rows {
                by_trial.entry(matrix.rows[r].trial_id).or_default().push(r);
            }
            if by_trial.len() < 2 {
                return Err(EvalError::BadConfig(
                    "by-trial grouping needs at least 2 trials per subject".into(),
                ));
            }
            Ok(by_trial.into_values().collect())
        }
    }
}

fn build_jobs(
    matrices: &[FeatureMatrix],
    cfg: &ExperimentConfig,
) -> Result<Vec<Job>, EvalError> {
    let mut jobs = Vec::new();
    for (wi, matrix) in matrices.iter().enumerate() {
        let w_tag = cfg.windows_ms[wi] as u64;
        let mut subjects: Vec<u32> = matrix.rows.iter().map(|r| r.subject_id).collect();
        subjects.sort_unstable();
        subjects.dedup();
        for &regime in &cfg.regimes {
            match regime {
                Regime::Intra => {
                    for &subject in &subjects {
                        let rows: Vec<usize> = (0..matrix.rows.len())
                            .filter(|&r| matrix.rows[r].subject_id == subject)
                            .collect();
                        let fold_seed =
                            derive_seed(cfg.seed, &[w_tag, regime.seed_tag(), subject as u64]);
                        let folds = intra_folds(matrix, &rows, cfg, fold_seed)?;
                        for (fold, valid) in folds.into_iter().enumerate() {
                            let vset: std::collections::HashSet<usize> =
                                valid.iter().copied().collect();
                            let train: Vec<usize> =
                                rows.iter().copied().filter(|r| !vset.contains(r)).collect();
                            jobs.push(Job {
                                window_idx: wi,
                                regime,
                                kind: JobKind::IntraFold { subject, fold },
                                train,
                                valid,
                                seed: derive_seed(
                                    cfg.seed,
                                    &[w_tag, regime.seed_tag(), subject as u64, fold as u64],
                                ),
                            });
                        }
                    }
                }
                Regime::Inter => {
                    let ids: Vec<u32> = matrix.rows.iter().map(|r| r.subject_id).collect();
                    for (train_subjects, held_out) in loso_split(&ids)? {
                        let train: Vec<usize> = (0..matrix.rows.len())
                            .filter(|&r| train_subjects.contains(&matrix.rows[r].subject_id))
                            .collect();
                        let valid: Vec<usize> = (0..matrix.rows.len())
                            .filter(|&r| matrix.rows[r].subject_id == held_out)
                            .collect();
                        jobs.push(Job {
                            window_idx: wi,
                            regime,
                            kind: JobKind::LosoSubject { held_out },
                            train,
                            valid,
                            seed: derive_seed(
                                cfg.seed,
                                &[w_tag, regime.seed_tag(), held_out as u64],
                            ),
                        });
                    }
                }
            }
        }
    }
    Ok(jobs)
}

fn evaluate_job(
    matrix: &FeatureMatrix,
    job: &Job,
    cfg: &ExperimentConfig,
    collect_for: Option<(FeatureSet, ModelFamily)>,
) -> Result<JobOutput, EvalError> {
    let norm = Normalization::fit(job.train.iter().map(|&r| matrix.rows[r].values.as_slice()));
    let tx: Vec<Vec<f64>> = job
        .train
        .iter()
        .map(|&r| norm.apply(&matrix.rows[r].values))
        .collect();
    let ty: Vec<ColorClass> = job.train.iter().map(|&r| matrix.rows[r].label).collect();
    let vx: Vec<Vec<f64>> = job
        .valid
        .iter()
        .map(|&r| norm.apply(&matrix.rows[r].values))
        .collect();
    let vy: Vec<ColorClass> = job.valid.iter().map(|&r| matrix.rows[r].label).collect();
    let vy_idx: Vec<usize> = vy.iter().map(|c| c.index()).collect();

    let mut metrics = Vec::with_capacity(cfg.feature_sets.len() * cfg.families.len());
    let mut collected = None;
    for &fset in &cfg.feature_sets {
        let fset_seed = derive_seed(job.seed, &[fset.seed_tag()]);
        let (txf, vxf): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match fset {
            FeatureSet::All => (tx.clone(), vx.clone()),
            FeatureSet::Forward10 => {
                let subset = forward_select(
                    &tx,
                    &ty,
                    &cfg.select_wrapper,
                    cfg.select_k,
                    cfg.select_folds,
                    fset_seed,
                )?;
                (subset.project(&tx), subset.project(&vx))
            }
            FeatureSet::Ae10 => {
                let model = autoencoder_train(&tx, &cfg.ae.with_seed(fset_seed))?;
                (model.encode(&tx)?, model.encode(&vx)?)
            }
        };
        for &family in &cfg.families {
            let family_seed =
                derive_seed(job.seed, &[10 + fset.seed_tag(), family_tag_u64(family)]);
            let spec = cfg.spec_for(family).with_seed(family_seed);
            let model = models::fit(&spec, &txf, &ty)?;
            let scores = model.predict_scores(&vxf)?;
            let preds: Vec<ColorClass> = scores
                .iter()
                .map(|row| ColorClass::from_index(crate::models::argmax_tie_low(row)).unwrap())
                .collect();
            let acc = accuracy(&vy, &preds)?;
            let auc = multiclass_auc(&scores, &vy_idx)?;
            let p_idx: Vec<usize> = preds.iter().map(|c| c.index()).collect();
            let cm = ConfusionMatrix::from_labels(&vy_idx, &p_idx, ColorClass::COUNT)?;
            metrics.push([acc, auc, mcc(&cm)]);
            if collect_for == Some((fset, family)) {
                collected = Some(vy.iter().copied().zip(scores.iter().copied()).collect());
            }
        }
    }
    Ok(JobOutput { metrics, collected })
}

fn family_tag_u64(family: ModelFamily) -> u64 {
    ModelFamily::ALL.iter().position(|&f| f == family).unwrap() as u64
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

fn aggregate_cells(
    jobs: &[Job],
    outputs: &[JobOutput],
    cfg: &ExperimentConfig,
) -> Vec<CellReport> {
    let n_fam = cfg.families.len();
    let mut cells = Vec::new();
    for (wi, &window_ms) in cfg.windows_ms.iter().enumerate() {
        for (fi, &fset) in cfg.feature_sets.iter().enumerate() {
            for &regime in &cfg.regimes {
                for (mi, &family) in cfg.families.iter().enumerate() {
                    let slot = fi * n_fam + mi;
                    // A cell may have no completed jobs when flushing partial
                    // results after a failure; skip it then.
                    let stats = match regime {
                        Regime::Intra => {
                            // subject -> fold metrics in fold order.
                            let mut per_subject: BTreeMap<u32, Vec<[f64; 3]>> = BTreeMap::new();
                            for (job, out) in jobs.iter().zip(outputs) {
                                if job.window_idx != wi || job.regime != Regime::Intra {
                                    continue;
                                }
                                if let JobKind::IntraFold { subject, .. } = job.kind {
                                    per_subject.entry(subject).or_default().push(out.metrics[slot]);
                                }
                            }
                            if per_subject.is_empty() {
                                continue;
                            }
                            let mut folds_per_subject = 0;
                            let mut subject_ids = Vec::new();
                            let mut subject_means: Vec<[MeanStd; 3]> = Vec::new();
                            for (subject, folds) in &per_subject {
                                subject_ids.push(*subject);
                                folds_per_subject = folds.len();
                                subject_means.push(std::array::from_fn(|m| {
                                    mean_std(&folds.iter().map(|f| f[m]).collect::<Vec<_>>())
                                }));
                            }
                            let metric = |m: usize| -> IntraMetric {
                                let means: Vec<f64> =
                                    subject_means.iter().map(|s| s[m].mean).collect();
                                let avg = mean_std(&means);
                                let mut best = 0usize;
                                for i in 1..means.len() {
                                    if means[i] > means[best] {
                                        best = i;
                                    }
                                }
                                IntraMetric {
                                    avg,
                                    best: subject_means[best][m],
                                    best_subject: subject_ids[best],
                                }
                            };
                            CellStats::Intra {
                                accuracy: metric(0),
                                auc: metric(1),
                                mcc: metric(2),
                                subjects: subject_ids.len(),
                                folds_per_subject,
                            }
                        }
                        Regime::Inter => {
                            let mut values: Vec<[f64; 3]> = Vec::new();
                            for (job, out) in jobs.iter().zip(outputs) {
                                if job.window_idx == wi && job.regime == Regime::Inter {
                                    values.push(out.metrics[slot]);
                                }
                            }
                            if values.is_empty() {
                                continue;
                            }
                            let column =
                                |m: usize| values.iter().map(|v| v[m]).collect::<Vec<_>>();
                            CellStats::Inter {
                                accuracy: mean_std(&column(0)),
                                auc: mean_std(&column(1)),
                                mcc: mean_std(&column(2)),
                                subjects: values.len(),
                            }
                        }
                    };
                    cells.push(CellReport {
                        window_ms,
                        feature_set: fset,
                        regime,
                        family,
                        stats,
                    });
                }
            }
        }
    }
    cells
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

/// Runs the full experiment grid over the epoch set. When `out_dir` is given,
/// report tables, sweep files, ROC curves and `report.json` are written
/// there; on a job failure, completed results are flushed together with
/// `failure_manifest.json` and `ExperimentFailed` is returned.
pub fn run_experiment(
    epochs: &[EpochedTrial],
    cfg: &ExperimentConfig,
    out_dir: Option<&Path>,
) -> Result<ExperimentReport, EvalError> {
    cfg.validate()?;
    let mut matrices = Vec::with_capacity(cfg.windows_ms.len());
    for &window_ms in &cfg.windows_ms {
        let mut params = PipelineParams::new(window_ms)?;
        params.n_cycles = cfg.n_cycles;
        params.artifact = cfg.artifact;
        params.jobs = cfg.jobs;
        matrices.push(assemble(epochs, &params)?);
    }
    execute(&matrices, cfg, out_dir)
}

/// Runs the grid on pre-extracted feature matrices, one per entry of
/// `cfg.windows_ms` (labels only; no extraction happens here). This is the
/// path for evaluating a feature CSV directly.
pub fn run_experiment_on_matrices(
    matrices: &[FeatureMatrix],
    cfg: &ExperimentConfig,
    out_dir: Option<&Path>,
) -> Result<ExperimentReport, EvalError> {
    cfg.validate()?;
    if matrices.len() != cfg.windows_ms.len() {
        return Err(EvalError::BadConfig(format!(
            "{} matrices for {} window labels",
            matrices.len(),
            cfg.windows_ms.len()
        )));
    }
    execute(matrices, cfg, out_dir)
}

fn execute(
    matrices: &[FeatureMatrix],
    cfg: &ExperimentConfig,
    out_dir: Option<&Path>,
) -> Result<ExperimentReport, EvalError> {
    let dropped_windows = matrices.iter().map(|m| m.dropped_windows).sum();
    let jobs = build_jobs(matrices, cfg)?;

    let run = |job: &Job| evaluate_job(&matrices[job.window_idx], job, cfg, None);
    let results: Vec<Result<JobOutput, EvalError>> = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .expect("failed to build worker pool");
        pool.install(|| jobs.par_iter().map(run).collect())
    } else {
        jobs.iter().map(run).collect()
    };

    let failures: Vec<(usize, String)> = results
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.as_ref().err().map(|e| (i, e.to_string())))
        .collect();
    if !failures.is_empty() {
        // Flush whatever completed, then the failure manifest.
        let mut ok_jobs = Vec::new();
        let mut ok_outputs = Vec::new();
        for (job, result) in jobs.iter().zip(results) {
            if let Ok(output) = result {
                ok_jobs.push(job.clone());
                ok_outputs.push(output);
            }
        }
        let cells = aggregate_cells(&ok_jobs, &ok_outputs, cfg);
        let mut subjects: Vec<u32> = matrices
            .iter()
            .flat_map(|m| m.rows.iter().map(|r| r.subject_id))
            .collect();
        subjects.sort_unstable();
        subjects.dedup();
        let partial = ExperimentReport {
            windows_ms: cfg.windows_ms.clone(),
            feature_sets: cfg.feature_sets.clone(),
            families: cfg.families.clone(),
            regimes: cfg.regimes.clone(),
            folds: cfg.folds,
            seed: cfg.seed,
            subjects,
            cells,
            roc: Vec::new(),
            roc_cell: None,
            dropped_windows,
        };
        if let Some(dir) = out_dir {
            write_report(&partial, dir)?;
        }
        let manifest = write_failure_manifest(&jobs, &failures, cfg, out_dir)?;
        return Err(EvalError::ExperimentFailed { manifest });
    }
    let outputs: Vec<JobOutput> = results.into_iter().map(|r| r.unwrap()).collect();
    let cells = aggregate_cells(&jobs, &outputs, cfg);

    // ROC curves for the best intra cell by average accuracy.
    let mut roc = Vec::new();
    let mut roc_cell = None;
    if cfg.emit_roc && cfg.regimes.contains(&Regime::Intra) {
        let mut best: Option<(usize, f64)> = None;
        for (i, cell) in cells.iter().enumerate() {
            if let CellStats::Intra { accuracy, .. } = &cell.stats {
                let better = match best {
                    None => true,
                    Some((_, score)) => accuracy.avg.mean > score,
                };
                if better {
                    best = Some((i, accuracy.avg.mean));
                }
            }
        }
        if let Some((ci, _)) = best {
            let cell = cells[ci].clone();
            roc_cell = Some((cell.window_ms, cell.feature_set, cell.family));
            let wi = cfg
                .windows_ms
                .iter()
                .position(|&w| w == cell.window_ms)
                .unwrap();
            let mut per_subject: BTreeMap<u32, Vec<(ColorClass, [f64; 3])>> = BTreeMap::new();
            for job in &jobs {
                if job.window_idx != wi || job.regime != Regime::Intra {
                    continue;
                }
                let JobKind::IntraFold { subject, .. } = job.kind else {
                    continue;
                };
                let out = evaluate_job(
                    &matrices[wi],
                    job,
                    cfg,
                    Some((cell.feature_set, cell.family)),
                )?;
                per_subject
                    .entry(subject)
                    .or_default()
                    .extend(out.collected.expect("collection requested"));
            }
            for (subject, pooled) in per_subject {
                for class in ColorClass::ALL {
                    let scores: Vec<f64> =
                        pooled.iter().map(|(_, s)| s[class.index()]).collect();
                    let y: Vec<bool> = pooled.iter().map(|(l, _)| *l == class).collect();
                    let curve = roc_curve(&scores, &y)?;
                    roc.push(RocEntry {
                        subject,
                        class,
                        curve,
                    });
                }
            }
        }
    }

    let mut subjects: Vec<u32> = matrices
        .iter()
        .flat_map(|m| m.rows.iter().map(|r| r.subject_id))
        .collect();
    subjects.sort_unstable();
    subjects.dedup();
    let report = ExperimentReport {
        windows_ms: cfg.windows_ms.clone(),
        feature_sets: cfg.feature_sets.clone(),
        families: cfg.families.clone(),
        regimes: cfg.regimes.clone(),
        folds: cfg.folds,
        seed: cfg.seed,
        subjects,
        cells,
        roc,
        roc_cell,
        dropped_windows,
    };
    if let Some(dir) = out_dir {
        write_report(&report, dir)?;
    }
    Ok(report)
}

fn write_failure_manifest(
    jobs: &[Job],
    failures: &[(usize, String)],
    cfg: &ExperimentConfig,
    out_dir: Option<&Path>,
) -> Result<PathBuf, EvalError> {
    #[derive(Serialize)]
    struct FailureEntry {
        window_ms: u32,
        regime: &'static str,
        subject: Option<u32>,
        fold: Option<usize>,
        error: String,
    }
    let entries: Vec<FailureEntry> = failures
        .iter()
        .map(|(i, error)| {
            let job = &jobs[*i];
            let (subject, fold) = match job.kind {
                JobKind::IntraFold { subject, fold } => (Some(subject), Some(fold)),
                JobKind::LosoSubject { held_out } => (Some(held_out), None),
            };
            FailureEntry {
                window_ms: cfg.windows_ms[job.window_idx],
                regime: job.regime.tag(),
                subject,
                fold,
                error: error.clone(),
            }
        })
        .collect();
    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("failure_manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&entries).unwrap())?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// Report files
// ---------------------------------------------------------------------------

const METRIC_NAMES: [&str; 3] = ["accuracy", "auc", "mcc"];

fn cell_metric(stats: &CellStats, m: usize) -> (&'static str, Vec<(String, MeanStd)>) {
    match stats {
        CellStats::Intra { accuracy, auc, mcc, .. } => {
            let im = match m {
                0 => accuracy,
                1 => auc,
                _ => mcc,
            };
            (
                "intra",
                vec![
                    ("avg_subject".to_string(), im.avg),
                    ("best_subject".to_string(), im.best),
                ],
            )
        }
        CellStats::Inter { accuracy, auc, mcc, .. } => {
            let ms = match m {
                0 => accuracy,
                1 => auc,
                _ => mcc,
            };
            ("inter", vec![("inter_subject".to_string(), *ms)])
        }
    }
}

/// Formats one table cell as `mean (std)` with three decimals.
pub fn format_cell(ms: MeanStd) -> String {
    format!("{:.3} ({:.3})", ms.mean, ms.std)
}

/// Writes, per window, one CSV table per (metric, feature set) with columns
/// `metric_row,<family tags>` and rows avg_subject / best_subject /
/// inter_subject (as available); plus per-regime window sweep files, ROC
/// curve CSVs and the full `report.json`.
pub fn write_report(report: &ExperimentReport, out_dir: &Path) -> Result<(), EvalError> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(
        out_dir.join("report.json"),
        serde_json::to_string_pretty(report).unwrap(),
    )?;

    for &window_ms in &report.windows_ms {
        let dir = out_dir.join(format!("w{window_ms}"));
        std::fs::create_dir_all(&dir)?;
        for (m, metric) in METRIC_NAMES.iter().enumerate() {
            for &fset in &report.feature_sets {
                let mut rows: BTreeMap<String, Vec<String>> = BTreeMap::new();
                for &family in &report.families {
                    for c in report.cells.iter().filter(|c| {
                        c.window_ms == window_ms && c.feature_set == fset && c.family == family
                    }) {
                        let (_, entries) = cell_metric(&c.stats, m);
                        for (row_name, ms) in entries {
                            rows.entry(row_name).or_default().push(format_cell(ms));
                        }
                    }
                }
                let mut text = String::from("metric_row");
                for family in &report.families {
                    let _ = write!(text, ",{}", family.tag());
                }
                text.push('\n');
                // Fixed row order matching the published table layout.
                for row_name in ["avg_subject", "best_subject", "inter_subject"] {
                    if let Some(cells) = rows.get(row_name) {
                        let _ = write!(text, "{row_name}");
                        for cell in cells {
                            let _ = write!(text, ",{cell}");
                        }
                        text.push('\n');
                    }
                }
                std::fs::write(dir.join(format!("table_{metric}_{}.csv", fset.tag())), text)?;
            }
        }
    }

    // Window sweeps (metric vs window per family and feature set).
    for &regime in &report.regimes {
        let mut text =
            String::from("window_ms,feature_set,family,accuracy_mean,accuracy_std,auc_mean,auc_std,mcc_mean,mcc_std\n");
        for cell in report.cells.iter().filter(|c| c.regime == regime) {
            let (acc, auc, mcc_v) = match &cell.stats {
                CellStats::Intra { accuracy, auc, mcc, .. } => (accuracy.avg, auc.avg, mcc.avg),
                CellStats::Inter { accuracy, auc, mcc, .. } => (*accuracy, *auc, *mcc),
            };
            let _ = writeln!(
                text,
                "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                cell.window_ms,
                cell.feature_set.tag(),
                cell.family.tag(),
                acc.mean,
                acc.std,
                auc.mean,
                auc.std,
                mcc_v.mean,
                mcc_v.std
            );
        }
        std::fs::write(out_dir.join(format!("sweep_{}.csv", regime.tag())), text)?;
    }

    for entry in &report.roc {
        let mut text = String::from("threshold,fpr,tpr\n");
        for p in &entry.curve.points {
            let _ = writeln!(text, "{},{},{}", p.threshold, p.fpr, p.tpr);
        }
        std::fs::write(
            out_dir.join(format!(
                "roc_s{}_{}.csv",
                entry.subject,
                entry.class.name().to_ascii_lowercase()
            )),
            text,
        )?;
    }
    Ok(())
}
