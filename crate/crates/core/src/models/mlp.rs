//! Two-hidden-layer perceptron: d -> h1 -> h2 -> 3 with sigmoid hidden
//! units, softmax output, cross-entropy loss and L2 weight decay. Trained by
//! seeded mini-batch gradient descent; weight init is uniform scaled by
//! fan-in.

use serde::{Deserialize, Serialize};

use super::{softmax_row, ModelError, NUM_CLASSES};
use crate::rng::{derive_seed, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub hidden: (usize, usize),
    pub l2: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpSpec {
    fn default() -> Self {
        MlpSpec {
            hidden: (300, 100),
            l2: 1e-4,
            learning_rate: 0.01,
            epochs: 500,
            batch_size: 32,
            seed: 0,
        }
    }
}

/// One dense layer: `weights[o * n_in + i]`, row per output unit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub(crate) fn seeded(n_in: usize, n_out: usize, rng: &mut Rng) -> Layer {
        let bound = 1.0 / (n_in as f64).sqrt();
        let weights = (0..n_in * n_out)
            .map(|_| rng.uniform(-bound, bound))
            .collect();
        Layer {
            n_in,
            n_out,
            weights,
            biases: vec![0.0; n_out],
        }
    }

    pub(crate) fn forward(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.n_out {
            let row = &self.weights[o * self.n_in..(o + 1) * self.n_in];
            let mut s = self.biases[o];
            for (w, x) in row.iter().zip(input) {
                s += w * x;
            }
            out.push(s);
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: [Layer; 3],
    pub l2: f64,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct Activations {
    h1: Vec<f64>,
    h2: Vec<f64>,
    probs: [f64; NUM_CLASSES],
}

impl MlpModel {
    fn forward(&self, row: &[f64]) -> Activations {
        let mut h1 = Vec::new();
        self.layers[0].forward(row, &mut h1);
        h1.iter_mut().for_each(|v| *v = sigmoid(*v));
        let mut h2 = Vec::new();
        self.layers[1].forward(&h1, &mut h2);
        h2.iter_mut().for_each(|v| *v = sigmoid(*v));
        let mut out = Vec::new();
        self.layers[2].forward(&h2, &mut out);
        let logits: [f64; NUM_CLASSES] = std::array::from_fn(|k| out[k]);
        Activations {
            h1,
            h2,
            probs: softmax_row(&logits),
        }
    }

    /// Mean cross-entropy over the batch plus `0.5 * l2 * sum(weights^2)`
    /// (biases excluded), and the gradient in the same layout as the model.
    /// Used by both the training loop and the finite-difference checks.
    pub fn loss_and_grad(&self, x: &[Vec<f64>], y: &[usize]) -> (f64, MlpGradients) {
        let n = x.len() as f64;
        let mut grads = MlpGradients::zeros_like(self);
        let mut loss = 0.0;
        for (row, &label) in x.iter().zip(y) {
            let acts = self.forward(row);
            loss -= acts.probs[label].max(1e-300).ln();
            // Output delta: probs - onehot.
            let delta_out: Vec<f64> = (0..NUM_CLASSES)
                .map(|k| (acts.probs[k] - if k == label { 1.0 } else { 0.0 }) / n)
                .collect();
            // Hidden deltas through sigmoid derivatives.
            let l2w = &self.layers[2];
            let mut delta_h2 = vec![0.0; l2w.n_in];
            for (o, &d_out) in delta_out.iter().enumerate() {
                let row = &l2w.weights[o * l2w.n_in..(o + 1) * l2w.n_in];
                for (d, w) in delta_h2.iter_mut().zip(row) {
                    *d += d_out * w;
                }
            }
            for (d, h) in delta_h2.iter_mut().zip(&acts.h2) {
                *d *= h * (1.0 - h);
            }
            let l1w = &self.layers[1];
            let mut delta_h1 = vec![0.0; l1w.n_in];
            for (o, &d_h2) in delta_h2.iter().enumerate() {
                let row = &l1w.weights[o * l1w.n_in..(o + 1) * l1w.n_in];
                for (d, w) in delta_h1.iter_mut().zip(row) {
                    *d += d_h2 * w;
                }
            }
            for (d, h) in delta_h1.iter_mut().zip(&acts.h1) {
                *d *= h * (1.0 - h);
            }
            grads.accumulate(2, &delta_out, &acts.h2);
            grads.accumulate(1, &delta_h2, &acts.h1);
            grads.accumulate(0, &delta_h1, row);
        }
        loss /= n;
        if self.l2 > 0.0 {
            for (layer, grad) in self.layers.iter().zip(grads.layers.iter_mut()) {
                for (w, g) in layer.weights.iter().zip(grad.0.iter_mut()) {
                    loss += 0.5 * self.l2 * w * w;
                    *g += self.l2 * w;
                }
            }
        }
        (loss, grads)
    }

    fn apply(&mut self, grads: &MlpGradients, lr: f64) {
        for (layer, (gw, gb)) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, g) in layer.weights.iter_mut().zip(gw) {
                *w -= lr * g;
            }
            for (b, g) in layer.biases.iter_mut().zip(gb) {
                *b -= lr * g;
            }
        }
    }
}

/// Per-layer (weight, bias) gradients.
pub struct MlpGradients {
    pub layers: [(Vec<f64>, Vec<f64>); 3],
}

impl MlpGradients {
    fn zeros_like(model: &MlpModel) -> Self {
        MlpGradients {
            layers: std::array::from_fn(|i| {
                (
                    vec![0.0; model.layers[i].weights.len()],
                    vec![0.0; model.layers[i].biases.len()],
                )
            }),
        }
    }

    fn accumulate(&mut self, layer: usize, delta: &[f64], input: &[f64]) {
        let (gw, gb) = &mut self.layers[layer];
        let n_in = input.len();
        for (o, &d) in delta.iter().enumerate() {
            for (i, &xi) in input.iter().enumerate() {
                gw[o * n_in + i] += d * xi;
            }
            gb[o] += d;
        }
    }
}

/// Builds an untrained, seeded network (useful for gradient checks).
pub fn init_model(spec: &MlpSpec, n_features: usize) -> MlpModel {
    let mut rng = Rng::seed_from_u64(derive_seed(spec.seed, &[0]));
    let (h1, h2) = spec.hidden;
    MlpModel {
        layers: [
            Layer::seeded(n_features, h1, &mut rng),
            Layer::seeded(h1, h2, &mut rng),
            Layer::seeded(h2, NUM_CLASSES, &mut rng),
        ],
        l2: spec.l2,
    }
}

pub fn fit(spec: &MlpSpec, x: &[Vec<f64>], y: &[usize]) -> Result<MlpModel, ModelError> {
    let mut model = init_model(spec, x[0].len());
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut shuffle_rng = Rng::seed_from_u64(derive_seed(spec.seed, &[1]));
    let batch = spec.batch_size.max(1);
    for _epoch in 0..spec.epochs {
        shuffle_rng.shuffle(&mut order);
        for chunk in order.chunks(batch) {
            let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| x[i].clone()).collect();
            let by: Vec<usize> = chunk.iter().map(|&i| y[i]).collect();
            let (loss, grads) = model.loss_and_grad(&bx, &by);
            if !loss.is_finite() {
                return Err(ModelError::SingularData("mlp loss diverged".into()));
            }
            model.apply(&grads, spec.learning_rate);
        }
    }
    Ok(model)
}

pub fn predict_scores(model: &MlpModel, x: &[Vec<f64>]) -> Vec<[f64; NUM_CLASSES]> {
    x.iter().map(|row| model.forward(row).probs).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ColorClass;
    use crate::models::fixtures::cluster_fixture;
    use crate::models::{fit as model_fit, ModelSpec};

    fn small_spec() -> MlpSpec {
        MlpSpec {
            hidden: (16, 8),
            epochs: 200,
            learning_rate: 0.3,
            batch_size: 16,
            ..MlpSpec::default()
        }
    }

    #[test]
    fn learns_separable_clusters() {
        let (x, y) = cluster_fixture(20, 0.3, 21);
        let model = model_fit(&ModelSpec::Mlp(small_spec()), &x, &y).unwrap();
        let pred = model.predict(&x).unwrap();
        let acc =
            pred.iter().zip(&y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64;
        assert!(acc >= 0.95, "training accuracy {acc}");
    }

    #[test]
    fn deterministic_under_seed() {
        let (x, y) = cluster_fixture(8, 0.5, 22);
        let spec = ModelSpec::Mlp(MlpSpec {
            epochs: 20,
            ..small_spec()
        });
        let a = model_fit(&spec, &x, &y).unwrap();
        let b = model_fit(&spec, &x, &y).unwrap();
        assert_eq!(a.predict_scores(&x).unwrap(), b.predict_scores(&x).unwrap());
    }

    #[test]
    fn scores_sum_to_one() {
        let (x, y) = cluster_fixture(5, 0.5, 23);
        let spec = ModelSpec::Mlp(MlpSpec {
            epochs: 5,
            ..small_spec()
        });
        let model = model_fit(&spec, &x, &y).unwrap();
        for row in model.predict_scores(&x).unwrap() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let spec = MlpSpec {
            hidden: (5, 4),
            l2: 1e-3,
            seed: 3,
            ..MlpSpec::default()
        };
        let mut rng = crate::rng::Rng::seed_from_u64(17);
        let x: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..4).map(|_| rng.normal()).collect())
            .collect();
        let y = vec![0usize, 1, 2, 1, 0];
        let model = init_model(&spec, 4);
        let (_, grads) = model.loss_and_grad(&x, &y);
        let h = 1e-5;
        let mut max_rel = 0.0f64;
        for layer in 0..3 {
            for wi in 0..model.layers[layer].weights.len() {
                let mut plus = model.clone();
                plus.layers[layer].weights[wi] += h;
                let mut minus = model.clone();
                minus.layers[layer].weights[wi] -= h;
                let fd = (plus.loss_and_grad(&x, &y).0 - minus.loss_and_grad(&x, &y).0)
                    / (2.0 * h);
                let g = grads.layers[layer].0[wi];
                let rel = (fd - g).abs() / fd.abs().max(g.abs()).max(1e-8);
                max_rel = max_rel.max(rel);
            }
        }
        assert!(max_rel < 1e-4, "max relative gradient error {max_rel}");
    }

    #[test]
    fn all_classes_required() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let y = vec![ColorClass::Red, ColorClass::Red, ColorClass::Green];
        assert!(matches!(
            model_fit(&ModelSpec::Mlp(small_spec()), &x, &y),
            Err(crate::models::ModelError::ClassMissing(_))
        ));
    }
}
