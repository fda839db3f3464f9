//! Dimensionality reduction to 10 features: greedy forward selection scored
//! by a wrapper classifier's cross-validated macro F1, and an unsupervised
//! stacked autoencoder whose latent layer provides the reduced set.

use serde::{Deserialize, Serialize};

use crate::eval;
use crate::features::FEATURE_COUNT;
use crate::ingest::ColorClass;
use crate::models::{self, mlp::Layer, ModelSpec};
use crate::rng::{derive_seed, Rng};

#[derive(Debug, thiserror::Error)]
pub enum ReduceError {
    #[error("cannot select {k} features from {available}")]
    TooManyFeatures { k: usize, available: usize },
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error("class {0} has fewer rows than folds")]
    DegenerateClass(ColorClass),
    #[error("autoencoder loss became non-finite at epoch {epoch} (learning rate too high?)")]
    NonFiniteLoss { epoch: usize },
    #[error("autoencoder expects {expected} inputs, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("latent width {latent} must be below the input width {input}")]
    LatentTooWide { latent: usize, input: usize },
    #[error("model error: {0}")]
    Model(#[from] models::ModelError),
    #[error("split error: {0}")]
    Split(String),
}

// ---------------------------------------------------------------------------
// Forward selection
// ---------------------------------------------------------------------------

/// An ordered selected-column set plus the metric value recorded after each
/// greedy addition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSubset {
    pub indices: Vec<usize>,
    pub names: Vec<String>,
    /// Macro F1 after each addition; `trace[i]` is the best candidate score
    /// at step i.
    pub trace: Vec<f64>,
}

impl FeatureSubset {
    /// Projects rows onto the selected columns.
    pub fn project(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter()
            .map(|row| self.indices.iter().map(|&i| row[i]).collect())
            .collect()
    }

    /// Text manifest: one `index,name` line per selected feature followed by
    /// the metric trace.
    pub fn manifest(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("# forward-selected features (in selection order)\n");
        for (i, name) in self.indices.iter().zip(&self.names) {
            let _ = writeln!(out, "{i},{name}");
        }
        out.push_str("# macro-F1 trace per step\n");
        for (step, score) in self.trace.iter().enumerate() {
            let _ = writeln!(out, "step {},{score}", step + 1);
        }
        out
    }
}

fn column_name(i: usize, width: usize) -> String {
    if width == FEATURE_COUNT {
        crate::features::feature_names()[i].clone()
    } else {
        format!("f{i}")
    }
}

/// Greedy wrapper selection: at each step every not-yet-chosen column is
/// scored by the wrapper model's cross-validated macro F1 on
/// (chosen + candidate); the argmax joins the set (ties break to the lowest
/// column index). Folds are drawn once and reused across all steps.
pub fn forward_select(
    x: &[Vec<f64>],
    y: &[ColorClass],
    wrapper: &ModelSpec,
    k: usize,
    folds: usize,
    seed: u64,
) -> Result<FeatureSubset, ReduceError> {
    let width = x.first().map(|r| r.len()).unwrap_or(0);
    if k > width {
        return Err(ReduceError::TooManyFeatures {
            k,
            available: width,
        });
    }
    if folds < 2 {
        return Err(ReduceError::InsufficientData(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    for color in ColorClass::ALL {
        if y.iter().filter(|&&c| c == color).count() < folds {
            return Err(ReduceError::DegenerateClass(color));
        }
    }
    let fold_sets = eval::stratified_kfold(y, folds, derive_seed(seed, &[0]))
        .map_err(|e| ReduceError::Split(e.to_string()))?;
    let splits: Vec<(Vec<usize>, Vec<usize>)> = fold_sets
        .iter()
        .map(|valid| {
            let vset: std::collections::HashSet<usize> = valid.iter().copied().collect();
            let train: Vec<usize> = (0..x.len()).filter(|i| !vset.contains(i)).collect();
            (train, valid.clone())
        })
        .collect();

    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut trace = Vec::with_capacity(k);
    while chosen.len() < k {
        let step = chosen.len() as u64;
        let mut best: Option<(usize, f64)> = None;
        for cand in 0..width {
            if chosen.contains(&cand) {
                continue;
            }
            let mut cols = chosen.clone();
            cols.push(cand);
            let mut f1_sum = 0.0;
            for (f, (train, valid)) in splits.iter().enumerate() {
                let project = |rows: &[usize]| -> Vec<Vec<f64>> {
                    rows.iter()
                        .map(|&r| cols.iter().map(|&c| x[r][c]).collect())
                        .collect()
                };
                let ty: Vec<ColorClass> = train.iter().map(|&r| y[r]).collect();
                let vy: Vec<ColorClass> = valid.iter().map(|&r| y[r]).collect();
                let fit_seed = derive_seed(seed, &[1, step, cand as u64, f as u64]);
                let model =
                    models::fit(&wrapper.with_seed(fit_seed), &project(train), &ty)?;
                let pred = model.predict(&project(valid))?;
                let y_idx: Vec<usize> = vy.iter().map(|c| c.index()).collect();
                let p_idx: Vec<usize> = pred.iter().map(|c| c.index()).collect();
                f1_sum += eval::macro_f1(&y_idx, &p_idx, ColorClass::COUNT);
            }
            let score = f1_sum / splits.len() as f64;
            let better = match best {
                None => true,
                Some((_, s)) => score > s,
            };
            if better {
                best = Some((cand, score));
            }
        }
        let (winner, score) = best.expect("at least one candidate remains");
        chosen.push(winner);
        trace.push(score);
    }
    let names = chosen.iter().map(|&i| column_name(i, width)).collect();
    Ok(FeatureSubset {
        indices: chosen,
        names,
        trace,
    })
}

// ---------------------------------------------------------------------------
// Stacked autoencoder
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AeConfig {
    pub latent: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for AeConfig {
    fn default() -> Self {
        AeConfig {
            latent: 10,
            hidden: 32,
            epochs: 200,
            learning_rate: 0.05,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl AeConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Encoder-decoder with mirrored layer sizes `[d, h, latent, h, d]`, tanh on
/// the three hidden layers and a linear output, trained on mean squared
/// reconstruction error.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AutoencoderModel {
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<Layer>,
    pub config: AeConfig,
    pub final_mse: f64,
    /// Full-dataset MSE after each epoch.
    pub loss_curve: Vec<f64>,
}

pub struct AeGradients {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl AutoencoderModel {
    fn forward_all(&self, row: &[f64]) -> Vec<Vec<f64>> {
        let mut activations = Vec::with_capacity(self.layers.len());
        let mut current = row.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::new();
            layer.forward(&current, &mut out);
            if li + 1 < self.layers.len() {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            activations.push(out.clone());
            current = out;
        }
        activations
    }

    /// Mean over rows and dimensions of the squared reconstruction error.
    pub fn reconstruction_mse(&self, x: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for row in x {
            let acts = self.forward_all(row);
            let recon = acts.last().unwrap();
            total += row
                .iter()
                .zip(recon)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        total / (x.len() * self.layer_sizes[0]) as f64
    }

    /// Loss (MSE over the batch) and gradients; shared by training and the
    /// finite-difference checks.
    pub fn loss_and_grad(&self, x: &[Vec<f64>]) -> (f64, AeGradients) {
        let d = self.layer_sizes[0] as f64;
        let n = x.len() as f64;
        let scale = 1.0 / (n * d);
        let mut grads = AeGradients {
            layers: self
                .layers
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()]))
                .collect(),
        };
        let mut loss = 0.0;
        for row in x {
            let acts = self.forward_all(row);
            let recon = acts.last().unwrap();
            let mut delta: Vec<f64> = recon
                .iter()
                .zip(row)
                .map(|(r, t)| {
                    let diff = r - t;
                    loss += diff * diff * scale;
                    2.0 * diff * scale
                })
                .collect();
            for li in (0..self.layers.len()).rev() {
                let input: &[f64] = if li == 0 { row } else { &acts[li - 1] };
                let layer = &self.layers[li];
                let (gw, gb) = &mut grads.layers[li];
                for (o, &dl) in delta.iter().enumerate() {
                    for (i, &xi) in input.iter().enumerate() {
                        gw[o * layer.n_in + i] += dl * xi;
                    }
                    gb[o] += dl;
                }
                if li > 0 {
                    let mut next = vec![0.0; layer.n_in];
                    for (o, &dl) in delta.iter().enumerate() {
                        for (i, slot) in next.iter_mut().enumerate() {
                            *slot += dl * layer.weights[o * layer.n_in + i];
                        }
                    }
                    // tanh'(z) = 1 - tanh(z)^2; activations store tanh(z).
                    for (slot, &a) in next.iter_mut().zip(&acts[li - 1]) {
                        *slot *= 1.0 - a * a;
                    }
                    delta = next;
                }
            }
        }
        (loss, grads)
    }

    fn apply(&mut self, grads: &AeGradients, lr: f64) {
        for (layer, (gw, gb)) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, g) in layer.weights.iter_mut().zip(gw) {
                *w -= lr * g;
            }
            for (b, g) in layer.biases.iter_mut().zip(gb) {
                *b -= lr * g;
            }
        }
    }

    /// Forward pass through the encoder half only: rows x latent.
    pub fn encode(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, ReduceError> {
        let expected = self.layer_sizes[0];
        x.iter()
            .map(|row| {
                if row.len() != expected {
                    return Err(ReduceError::DimensionMismatch {
                        expected,
                        got: row.len(),
                    });
                }
                let mut current = row.to_vec();
                for layer in &self.layers[..2] {
                    let mut out = Vec::new();
                    layer.forward(&current, &mut out);
                    out.iter_mut().for_each(|v| *v = v.tanh());
                    current = out;
                }
                Ok(current)
            })
            .collect()
    }
}

/// Builds a seeded, untrained autoencoder (exposed for gradient checks).
pub fn init_autoencoder(cfg: &AeConfig, input_width: usize) -> AutoencoderModel {
    let mut rng = Rng::seed_from_u64(derive_seed(cfg.seed, &[0]));
    let sizes = vec![input_width, cfg.hidden, cfg.latent, cfg.hidden, input_width];
    let layers = (0..4)
        .map(|i| Layer::seeded(sizes[i], sizes[i + 1], &mut rng))
        .collect();
    AutoencoderModel {
        layer_sizes: sizes,
        layers,
        config: *cfg,
        final_mse: f64::NAN,
        loss_curve: Vec::new(),
    }
}

/// Trains by seeded mini-batch gradient descent with a 1/(1 + 3 t/T) learning
/// rate decay. Expects z-scored input. Deterministic for a fixed seed.
pub fn autoencoder_train(
    x: &[Vec<f64>],
    cfg: &AeConfig,
) -> Result<AutoencoderModel, ReduceError> {
    let width = x.first().map(|r| r.len()).unwrap_or(0);
    if width == 0 {
        return Err(ReduceError::InsufficientData("empty training matrix".into()));
    }
    if cfg.latent >= width {
        return Err(ReduceError::LatentTooWide {
            latent: cfg.latent,
            input: width,
        });
    }
    let mut model = init_autoencoder(cfg, width);
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut shuffle_rng = Rng::seed_from_u64(derive_seed(cfg.seed, &[1]));
    let batch = cfg.batch_size.max(1);
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate / (1.0 + 3.0 * epoch as f64 / cfg.epochs.max(1) as f64);
        shuffle_rng.shuffle(&mut order);
        for chunk in order.chunks(batch) {
            let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| x[i].clone()).collect();
            let (loss, grads) = model.loss_and_grad(&bx);
            if !loss.is_finite() {
                return Err(ReduceError::NonFiniteLoss { epoch });
            }
            model.apply(&grads, lr);
        }
        let mse = model.reconstruction_mse(x);
        if !mse.is_finite() {
            return Err(ReduceError::NonFiniteLoss { epoch });
        }
        curve.push(mse);
    }
    model.final_mse = *curve.last().unwrap_or(&f64::NAN);
    model.loss_curve = curve;
    Ok(model)
}

// Versioned JSON for the autoencoder.
pub const AE_FILE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct AeFile {
    version: u32,
    model: AutoencoderModel,
}

pub fn autoencoder_to_json(model: &AutoencoderModel) -> String {
    serde_json::to_string_pretty(&AeFile {
        version: AE_FILE_VERSION,
        model: model.clone(),
    })
    .expect("autoencoder serialization cannot fail")
}

pub fn autoencoder_from_json(text: &str) -> Result<AutoencoderModel, ReduceError> {
    let file: AeFile = serde_json::from_str(text)
        .map_err(|e| ReduceError::InsufficientData(format!("bad autoencoder file: {e}")))?;
    if file.version != AE_FILE_VERSION {
        return Err(ReduceError::InsufficientData(format!(
            "unsupported autoencoder file version {}",
            file.version
        )));
    }
    Ok(file.model)
}
