//! Evaluation: the three report metrics (accuracy, pairwise multiclass
//! ROC-AUC, multiclass MCC), ROC curves, stratified k-fold and
//! leave-one-subject-out splits, and the experiment grid runner.

pub mod experiment;

pub use experiment::{
    format_cell, run_experiment, run_experiment_on_matrices, CellReport, CellStats, CvGrouping,
    ExperimentConfig, ExperimentReport, FeatureSet, IntraMetric, MeanStd, Regime, RocEntry,
};

use serde::{Deserialize, Serialize};

use crate::rng::Rng;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("input lengths differ: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("empty input")]
    Empty,
    #[error("both classes must be present for AUC")]
    SingleClass,
    #[error("class {0} has no samples")]
    ClassMissing(usize),
    #[error("class {class} has {count} samples, fewer than {folds} folds")]
    ClassTooSmall {
        class: usize,
        count: usize,
        folds: usize,
    },
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("leave-one-subject-out needs at least 2 subjects")]
    SingleSubject,
    #[error("feature error: {0}")]
    Feature(#[from] crate::features::FeatureError),
    #[error("model error: {0}")]
    Model(#[from] crate::models::ModelError),
    #[error("reduce error: {0}")]
    Reduce(#[from] crate::reduce::ReduceError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid experiment config: {0}")]
    BadConfig(String),
    #[error("experiment failed; partial results and failure manifest at {manifest}")]
    ExperimentFailed { manifest: std::path::PathBuf },
}

// ---------------------------------------------------------------------------
// Confusion matrix and MCC
// ---------------------------------------------------------------------------

/// Row-per-true-class confusion counts: `counts[i][k]` is the number of
/// samples of true class `i` predicted as `k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub k: usize,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn from_labels(
        y_true: &[usize],
        y_pred: &[usize],
        k: usize,
    ) -> Result<ConfusionMatrix, EvalError> {
        if y_true.len() != y_pred.len() {
            return Err(EvalError::LengthMismatch {
                a: y_true.len(),
                b: y_pred.len(),
            });
        }
        if y_true.is_empty() {
            return Err(EvalError::Empty);
        }
        let mut counts = vec![vec![0usize; k]; k];
        for (&t, &p) in y_true.iter().zip(y_pred) {
            counts[t][p] += 1;
        }
        Ok(ConfusionMatrix { k, counts })
    }

    /// Times class k truly occurred.
    pub fn true_count(&self, k: usize) -> usize {
        self.counts[k].iter().sum()
    }

    /// Times class k was predicted.
    pub fn predicted_count(&self, k: usize) -> usize {
        self.counts.iter().map(|row| row[k]).sum()
    }

    /// Correctly predicted samples (trace).
    pub fn correct(&self) -> usize {
        (0..self.k).map(|i| self.counts[i][i]).sum()
    }

    /// Total samples.
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }
}

/// Fraction of positions where the two label sequences agree.
pub fn accuracy<T: PartialEq>(y_true: &[T], y_pred: &[T]) -> Result<f64, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch {
            a: y_true.len(),
            b: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y_true.len() as f64)
}

/// Multiclass Matthews correlation coefficient
/// `(c*s - sum p_k t_k) / sqrt((s^2 - sum p_k^2)(s^2 - sum t_k^2))`,
/// where t_k are true counts, p_k predicted counts, c correct, s total.
/// Returns 0 when either denominator factor is 0.
pub fn mcc(cm: &ConfusionMatrix) -> f64 {
    let s = cm.total() as f64;
    let c = cm.correct() as f64;
    let mut sum_pt = 0.0;
    let mut sum_p2 = 0.0;
    let mut sum_t2 = 0.0;
    for k in 0..cm.k {
        let p = cm.predicted_count(k) as f64;
        let t = cm.true_count(k) as f64;
        sum_pt += p * t;
        sum_p2 += p * p;
        sum_t2 += t * t;
    }
    let denom = (s * s - sum_p2) * (s * s - sum_t2);
    if denom <= 0.0 {
        return 0.0;
    }
    (c * s - sum_pt) / denom.sqrt()
}

/// Macro-averaged F1 over `k` classes; classes with an undefined precision
/// or recall contribute 0.
pub fn macro_f1(y_true: &[usize], y_pred: &[usize], k: usize) -> f64 {
    let mut total = 0.0;
    for class in 0..k {
        let tp = y_true
            .iter()
            .zip(y_pred)
            .filter(|(&t, &p)| t == class && p == class)
            .count() as f64;
        let fp = y_true
            .iter()
            .zip(y_pred)
            .filter(|(&t, &p)| t != class && p == class)
            .count() as f64;
        let fn_ = y_true
            .iter()
            .zip(y_pred)
            .filter(|(&t, &p)| t == class && p != class)
            .count() as f64;
        let f1 = if tp > 0.0 {
            2.0 * tp / (2.0 * tp + fp + fn_)
        } else {
            0.0
        };
        total += f1;
    }
    total / k as f64
}

// ---------------------------------------------------------------------------
// ROC and AUC
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

/// Sweeps thresholds over the distinct scores (descending) and records
/// (FPR, TPR) after each group of tied scores, starting from (0, 0).
pub fn roc_curve(scores: &[f64], y: &[bool]) -> Result<RocCurve, EvalError> {
    if scores.len() != y.len() {
        return Err(EvalError::LengthMismatch {
            a: scores.len(),
            b: y.len(),
        });
    }
    let pos = y.iter().filter(|&&b| b).count();
    let neg = y.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    // Starting point above every score (finite so curves serialize cleanly).
    let top = scores[order[0]] + 1.0;
    let mut points = vec![RocPoint {
        threshold: top,
        tpr: 0.0,
        fpr: 0.0,
    }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        // Consume the whole tie group before emitting a point.
        while i < order.len() && scores[order[i]] == threshold {
            if y[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold,
            tpr: tp as f64 / pos as f64,
            fpr: fp as f64 / neg as f64,
        });
    }
    Ok(RocCurve { points })
}

/// Area under the ROC curve by trapezoidal integration over the threshold
/// sweep. Tie groups form single sweep steps, which matches the rank-based
/// estimate exactly.
pub fn binary_auc(scores: &[f64], y: &[bool]) -> Result<f64, EvalError> {
    let curve = roc_curve(scores, y)?;
    let mut area = 0.0;
    for pair in curve.points.windows(2) {
        area += (pair[1].fpr - pair[0].fpr) * (pair[1].tpr + pair[0].tpr) * 0.5;
    }
    Ok(area)
}

/// The same quantity as `binary_auc` computed by the tie-corrected
/// Mann-Whitney rank statistic: (sum of positive ranks - n+(n+ + 1)/2) / (n+ n-),
/// with average ranks for ties. Kept as an independent route; the two must
/// agree to floating-point precision.
pub fn binary_auc_rank(scores: &[f64], y: &[bool]) -> Result<f64, EvalError> {
    if scores.len() != y.len() {
        return Err(EvalError::LengthMismatch {
            a: scores.len(),
            b: y.len(),
        });
    }
    let pos = y.iter().filter(|&&b| b).count();
    let neg = y.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap().then(a.cmp(&b)));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Ranks are 1-based; tied entries share the average rank.
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if y[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let auc = (rank_sum_pos - pos as f64 * (pos as f64 + 1.0) / 2.0) / (pos as f64 * neg as f64);
    Ok(auc)
}

/// Pairwise multiclass AUC: for every unordered class pair {j, k}, restrict
/// to samples of those classes and compute the two directed AUCs (class-j
/// scores with j positive, class-k scores with k positive); the result is
/// their average over all pairs, i.e. the `2 / (c (c-1))` weighting of the
/// pair sums. Perfect one-hot scoring gives 1, uninformative scores 0.5.
pub fn multiclass_auc<S: AsRef<[f64]>>(scores: &[S], y: &[usize]) -> Result<f64, EvalError> {
    if scores.len() != y.len() {
        return Err(EvalError::LengthMismatch {
            a: scores.len(),
            b: y.len(),
        });
    }
    if scores.is_empty() {
        return Err(EvalError::Empty);
    }
    let c = scores[0].as_ref().len();
    for class in 0..c {
        if !y.contains(&class) {
            return Err(EvalError::ClassMissing(class));
        }
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for j in 0..c {
        for k in (j + 1)..c {
            let idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == j || y[i] == k).collect();
            let score_j: Vec<f64> = idx.iter().map(|&i| scores[i].as_ref()[j]).collect();
            let score_k: Vec<f64> = idx.iter().map(|&i| scores[i].as_ref()[k]).collect();
            let is_j: Vec<bool> = idx.iter().map(|&i| y[i] == j).collect();
            let is_k: Vec<bool> = idx.iter().map(|&i| y[i] == k).collect();
            total += binary_auc(&score_j, &is_j)?;
            total += binary_auc(&score_k, &is_k)?;
            count += 2;
        }
    }
    Ok(total / count as f64)
}

// ---------------------------------------------------------------------------
// Cross-validation splits
// ---------------------------------------------------------------------------

/// Stratified k-fold: per class, indices are shuffled (seeded) and dealt
/// round-robin, so per-class counts differ by at most 1 across folds.
/// Returns the validation index set of each fold.
pub fn stratified_kfold<T: Copy + Eq + Ord>(
    y: &[T],
    folds: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, EvalError> {
    if folds < 2 {
        return Err(EvalError::TooFewFolds(folds));
    }
    let mut classes: Vec<T> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut rng = Rng::seed_from_u64(seed);
    let mut fold_sets: Vec<Vec<usize>> = vec![Vec::new(); folds];
    for (class_no, class) in classes.iter().enumerate() {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == *class).collect();
        if members.len() < folds {
            return Err(EvalError::ClassTooSmall {
                class: class_no,
                count: members.len(),
                folds,
            });
        }
        rng.shuffle(&mut members);
        for (i, idx) in members.into_iter().enumerate() {
            fold_sets[i % folds].push(idx);
        }
    }
    for set in fold_sets.iter_mut() {
        set.sort_unstable();
    }
    Ok(fold_sets)
}

/// One split per distinct subject: (train subjects, held-out subject).
pub fn loso_split(subject_ids: &[u32]) -> Result<Vec<(Vec<u32>, u32)>, EvalError> {
    let mut subjects: Vec<u32> = subject_ids.to_vec();
    subjects.sort_unstable();
    subjects.dedup();
    if subjects.len() < 2 {
        return Err(EvalError::SingleSubject);
    }
    Ok(subjects
        .iter()
        .map(|&held| {
            let train: Vec<u32> = subjects.iter().copied().filter(|&s| s != held).collect();
            (train, held)
        })
        .collect())
}
