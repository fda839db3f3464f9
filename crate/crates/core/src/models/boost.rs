//! Gradient boosting for multiclass classification: per stage, one depth-3
//! regression tree per class is fit to the softmax cross-entropy residuals
//! (one-hot minus predicted probability), with leaf values from the
//! multiclass Newton step and a shrinkage of 0.1. Scores start at the class
//! log-priors. No row or feature subsampling, so training is deterministic
//! without a seed.

use serde::{Deserialize, Serialize};

use super::tree::{grow_regression, Tree};
use super::{softmax_row, NUM_CLASSES};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbSpec {
    pub n_estimators: usize,
    pub shrinkage: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for GbSpec {
    fn default() -> Self {
        GbSpec {
            n_estimators: 100,
            shrinkage: 0.1,
            max_depth: 3,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GbModel {
    pub init_scores: [f64; NUM_CLASSES],
    /// `stages[m][k]`: stage m's tree for class k. Leaves hold unscaled
    /// Newton-step values; `shrinkage` is applied at accumulation time.
    pub stages: Vec<Vec<Tree<f64>>>,
    pub shrinkage: f64,
}

pub fn fit(spec: &GbSpec, x: &[Vec<f64>], y: &[usize]) -> GbModel {
    let n = x.len();
    let mut counts = [0usize; NUM_CLASSES];
    for &label in y {
        counts[label] += 1;
    }
    // Guard against a zero count is unnecessary (fit() validates presence),
    // but keep the prior bounded anyway.
    let init_scores: [f64; NUM_CLASSES] =
        std::array::from_fn(|k| ((counts[k].max(1)) as f64 / n as f64).ln());
    let mut scores: Vec<[f64; NUM_CLASSES]> = vec![init_scores; n];
    let rows: Vec<usize> = (0..n).collect();
    let k_term = (NUM_CLASSES as f64 - 1.0) / NUM_CLASSES as f64;
    let mut stages = Vec::with_capacity(spec.n_estimators);
    for _ in 0..spec.n_estimators {
        let probs: Vec<[f64; NUM_CLASSES]> = scores.iter().map(softmax_row).collect();
        let mut stage = Vec::with_capacity(NUM_CLASSES);
        for k in 0..NUM_CLASSES {
            let residuals: Vec<f64> = (0..n)
                .map(|i| (if y[i] == k { 1.0 } else { 0.0 }) - probs[i][k])
                .collect();
            let leaf_value = |leaf_rows: &[usize]| -> f64 {
                let num: f64 = leaf_rows.iter().map(|&r| residuals[r]).sum();
                let den: f64 = leaf_rows
                    .iter()
                    .map(|&r| residuals[r].abs() * (1.0 - residuals[r].abs()))
                    .sum();
                if den.abs() < 1e-12 {
                    0.0
                } else {
                    k_term * num / den
                }
            };
            let tree = grow_regression(
                x,
                &residuals,
                &rows,
                spec.max_depth,
                spec.min_samples_leaf,
                &leaf_value,
            );
            for (i, row) in x.iter().enumerate() {
                scores[i][k] += spec.shrinkage * tree.leaf_for(row);
            }
            stage.push(tree);
        }
        stages.push(stage);
    }
    GbModel {
        init_scores,
        stages,
        shrinkage: spec.shrinkage,
    }
}

fn raw_scores(model: &GbModel, row: &[f64]) -> [f64; NUM_CLASSES] {
    let mut scores = model.init_scores;
    for stage in &model.stages {
        for (k, tree) in stage.iter().enumerate() {
            scores[k] += model.shrinkage * tree.leaf_for(row);
        }
    }
    scores
}

pub fn predict_scores(model: &GbModel, x: &[Vec<f64>]) -> Vec<[f64; NUM_CLASSES]> {
    x.iter()
        .map(|row| softmax_row(&raw_scores(model, row)))
        .collect()
}
