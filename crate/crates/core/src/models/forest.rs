//! Random forest: Gini CART trees on bootstrap samples with sqrt(d) feature
//! subsampling per node, majority vote across trees. Tree `t` draws its
//! bootstrap and feature samples from a generator seeded with
//! `derive_seed(seed, [t])`, so the forest is reproducible and independent of
//! evaluation order.

use serde::{Deserialize, Serialize};

use super::tree::{grow_classification, ClassTreeConfig, Tree};
use super::{argmax_tie_low, NUM_CLASSES};
use crate::rng::{derive_seed, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RfSpec {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for RfSpec {
    fn default() -> Self {
        RfSpec {
            n_estimators: 100,
            max_depth: None,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RfModel {
    pub trees: Vec<Tree<[f64; NUM_CLASSES]>>,
}

pub fn fit(spec: &RfSpec, x: &[Vec<f64>], y: &[usize]) -> RfModel {
    let n = x.len();
    let n_features = x[0].len();
    let subsample = ((n_features as f64).sqrt().floor() as usize).max(1);
    let cfg = ClassTreeConfig {
        max_depth: spec.max_depth,
        min_samples_leaf: spec.min_samples_leaf,
        feature_subsample: Some(subsample),
    };
    let trees = (0..spec.n_estimators)
        .map(|t| {
            let mut rng = Rng::seed_from_u64(derive_seed(spec.seed, &[t as u64]));
            let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(n)).collect();
            grow_classification(x, y, &rows, &cfg, &mut rng)
        })
        .collect();
    RfModel { trees }
}

pub fn predict_scores(model: &RfModel, x: &[Vec<f64>]) -> Vec<[f64; NUM_CLASSES]> {
    let inv = 1.0 / model.trees.len() as f64;
    x.iter()
        .map(|row| {
            let mut votes = [0.0; NUM_CLASSES];
            for tree in &model.trees {
                votes[argmax_tie_low(tree.leaf_for(row))] += 1.0;
            }
            votes.iter_mut().for_each(|v| *v *= inv);
            votes
        })
        .collect()
}
