//! K nearest neighbors with Euclidean distance. Scores are vote fractions
//! over the k nearest training points (ties in distance break toward the
//! earlier training row).

use serde::{Deserialize, Serialize};

use super::NUM_CLASSES;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnSpec {
    pub k: usize,
}

impl Default for KnnSpec {
    fn default() -> Self {
        KnnSpec { k: 5 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

pub fn fit(spec: &KnnSpec, x: &[Vec<f64>], y: &[usize]) -> KnnModel {
    KnnModel {
        k: spec.k.min(x.len()),
        points: x.to_vec(),
        labels: y.to_vec(),
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

pub fn predict_scores(model: &KnnModel, x: &[Vec<f64>]) -> Vec<[f64; NUM_CLASSES]> {
    x.iter()
        .map(|q| {
            let mut dists: Vec<(f64, usize)> = model
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| (squared_distance(q, p), i))
                .collect();
            dists.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let mut votes = [0.0; NUM_CLASSES];
            for &(_, i) in dists.iter().take(model.k) {
                votes[model.labels[i]] += 1.0;
            }
            let inv = 1.0 / model.k as f64;
            votes.iter_mut().for_each(|v| *v *= inv);
            votes
        })
        .collect()
}
