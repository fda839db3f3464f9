//! Multinomial logistic regression trained by full-batch proximal gradient
//! descent with backtracking line search. L2 is part of the smooth objective;
//! L1 is handled by soft-thresholding after each gradient step. The bias
//! column is never penalized. `C` is the inverse regularization strength:
//! the penalty weight is `1 / (C * n_samples)`.

use serde::{Deserialize, Serialize};

use super::{softmax_row, ModelError, NUM_CLASSES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Penalty {
    L1,
    L2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrSpec {
    pub penalty: Penalty,
    pub c: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LrSpec {
    fn default() -> Self {
        LrSpec {
            penalty: Penalty::L2,
            c: 1.0,
            max_iter: 500,
            tol: 1e-7,
        }
    }
}

/// Fitted weights: `NUM_CLASSES x (n_features + 1)` row-major; the last
/// column of each row is the bias.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LrModel {
    pub weights: Vec<f64>,
    pub n_features: usize,
}

fn scores_for(weights: &[f64], n_features: usize, row: &[f64]) -> [f64; NUM_CLASSES] {
    let stride = n_features + 1;
    std::array::from_fn(|k| {
        let w = &weights[k * stride..(k + 1) * stride];
        let mut s = w[n_features];
        for (wi, xi) in w[..n_features].iter().zip(row) {
            s += wi * xi;
        }
        s
    })
}

/// Mean cross-entropy plus `0.5 * l2 * sum(w^2)` (bias excluded) and its
/// gradient. This is the smooth part of the objective; L1 is handled by the
/// proximal step, not here.
pub fn lr_loss_grad(
    weights: &[f64],
    x: &[Vec<f64>],
    y: &[usize],
    l2: f64,
) -> (f64, Vec<f64>) {
    let n = x.len() as f64;
    let n_features = x[0].len();
    let stride = n_features + 1;
    let mut loss = 0.0;
    let mut grad = vec![0.0; weights.len()];
    for (row, &label) in x.iter().zip(y) {
        let p = softmax_row(&scores_for(weights, n_features, row));
        loss -= p[label].max(1e-300).ln();
        for k in 0..NUM_CLASSES {
            let coeff = (p[k] - if k == label { 1.0 } else { 0.0 }) / n;
            let g = &mut grad[k * stride..(k + 1) * stride];
            for (gi, xi) in g[..n_features].iter_mut().zip(row) {
                *gi += coeff * xi;
            }
            g[n_features] += coeff;
        }
    }
    loss /= n;
    if l2 > 0.0 {
        for k in 0..NUM_CLASSES {
            for j in 0..n_features {
                let w = weights[k * stride + j];
                loss += 0.5 * l2 * w * w;
                grad[k * stride + j] += l2 * w;
            }
        }
    }
    (loss, grad)
}

fn soft_threshold(weights: &mut [f64], n_features: usize, amount: f64) {
    let stride = n_features + 1;
    for k in 0..NUM_CLASSES {
        for w in weights[k * stride..k * stride + n_features].iter_mut() {
            *w = w.signum() * (w.abs() - amount).max(0.0);
        }
    }
}

pub fn fit(spec: &LrSpec, x: &[Vec<f64>], y: &[usize]) -> Result<LrModel, ModelError> {
    let n_features = x[0].len();
    let stride = n_features + 1;
    let alpha = 1.0 / (spec.c * x.len() as f64);
    let (l2, l1) = match spec.penalty {
        Penalty::L2 => (alpha, 0.0),
        Penalty::L1 => (0.0, alpha),
    };
    let mut w = vec![0.0; NUM_CLASSES * stride];
    let (mut loss, mut grad) = lr_loss_grad(&w, x, y, l2);
    let mut step = 1.0;
    for _ in 0..spec.max_iter {
        if !loss.is_finite() {
            return Err(ModelError::SingularData("logistic regression loss".into()));
        }
        // Backtracking on the quadratic upper bound of the smooth part;
        // the proximal step applies the L1 shrinkage at the same rate.
        step *= 2.0;
        let mut next_w;
        let mut next_loss;
        let mut next_grad;
        loop {
            next_w = w
                .iter()
                .zip(&grad)
                .map(|(wi, gi)| wi - step * gi)
                .collect::<Vec<f64>>();
            if l1 > 0.0 {
                soft_threshold(&mut next_w, n_features, step * l1);
            }
            let diff_sq: f64 = next_w
                .iter()
                .zip(&w)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let dot: f64 = next_w
                .iter()
                .zip(&w)
                .zip(&grad)
                .map(|((a, b), g)| (a - b) * g)
                .sum();
            let (l, g) = lr_loss_grad(&next_w, x, y, l2);
            next_loss = l;
            next_grad = g;
            if next_loss <= loss + dot + diff_sq / (2.0 * step) || step < 1e-12 {
                break;
            }
            step *= 0.5;
        }
        let max_change = next_w
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        w = next_w;
        loss = next_loss;
        grad = next_grad;
        if max_change < spec.tol {
            break;
        }
    }
    Ok(LrModel {
        weights: w,
        n_features,
    })
}

pub fn predict_scores(model: &LrModel, x: &[Vec<f64>]) -> Vec<[f64; NUM_CLASSES]> {
    x.iter()
        .map(|row| softmax_row(&scores_for(&model.weights, model.n_features, row)))
        .collect()
}
