//! Six classifier families behind one train/predict contract, plus grid
//! search. Classes are fixed as [Red, Green, Blue] = [0, 1, 2] everywhere.
//!
//! Every family is implemented in this crate (no ML library): KNN stores the
//! data, logistic regression runs proximal gradient descent, random forest
//! grows Gini CART trees on bootstrap samples, the MLP is a 2-hidden-layer
//! sigmoid network, the SVM trains one-vs-rest RBF machines by SMO, and
//! gradient boosting fits depth-3 regression trees to softmax residuals.

pub mod boost;
pub mod forest;
pub mod knn;
pub mod linear;
pub mod mlp;
pub mod svm;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::ingest::ColorClass;

pub const NUM_CLASSES: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("training set has {rows} rows but {labels} labels")]
    ShapeMismatch { rows: usize, labels: usize },
    #[error("training set needs at least {NUM_CLASSES} rows, got {0}")]
    TooFewRows(usize),
    #[error("training data contains a non-finite value")]
    NonFiniteInput,
    #[error("class {0} is missing from the training labels")]
    ClassMissing(ColorClass),
    #[error("model expects {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training diverged: {0}")]
    SingularData(String),
    #[error("empty hyperparameter grid")]
    EmptyGrid,
    #[error("cross-validation error: {0}")]
    Split(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelFamily {
    Knn,
    LogisticRegression,
    RandomForest,
    Mlp,
    Svm,
    GradientBoosting,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 6] = [
        ModelFamily::Knn,
        ModelFamily::Svm,
        ModelFamily::LogisticRegression,
        ModelFamily::RandomForest,
        ModelFamily::Mlp,
        ModelFamily::GradientBoosting,
    ];

    /// Short column tag used in report tables.
    pub fn tag(self) -> &'static str {
        match self {
            ModelFamily::Knn => "knn",
            ModelFamily::Svm => "svm",
            ModelFamily::LogisticRegression => "lr",
            ModelFamily::RandomForest => "rf",
            ModelFamily::Mlp => "mlp",
            ModelFamily::GradientBoosting => "gb",
        }
    }

    pub fn parse_tag(s: &str) -> Option<ModelFamily> {
        Self::ALL.into_iter().find(|f| f.tag() == s)
    }
}

/// A family plus its hyperparameters and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelSpec {
    Knn(knn::KnnSpec),
    LogisticRegression(linear::LrSpec),
    RandomForest(forest::RfSpec),
    Mlp(mlp::MlpSpec),
    Svm(svm::SvmSpec),
    GradientBoosting(boost::GbSpec),
}

impl ModelSpec {
    pub fn family(&self) -> ModelFamily {
        match self {
            ModelSpec::Knn(_) => ModelFamily::Knn,
            ModelSpec::LogisticRegression(_) => ModelFamily::LogisticRegression,
            ModelSpec::RandomForest(_) => ModelFamily::RandomForest,
            ModelSpec::Mlp(_) => ModelFamily::Mlp,
            ModelSpec::Svm(_) => ModelFamily::Svm,
            ModelSpec::GradientBoosting(_) => ModelFamily::GradientBoosting,
        }
    }

    /// Default spec per family.
    pub fn default_for(family: ModelFamily) -> ModelSpec {
        match family {
            ModelFamily::Knn => ModelSpec::Knn(knn::KnnSpec::default()),
            ModelFamily::LogisticRegression => {
                ModelSpec::LogisticRegression(linear::LrSpec::default())
            }
            ModelFamily::RandomForest => ModelSpec::RandomForest(forest::RfSpec::default()),
            ModelFamily::Mlp => ModelSpec::Mlp(mlp::MlpSpec::default()),
            ModelFamily::Svm => ModelSpec::Svm(svm::SvmSpec::default()),
            ModelFamily::GradientBoosting => ModelSpec::GradientBoosting(boost::GbSpec::default()),
        }
    }

    /// Returns a copy with the given seed (no-op for unseeded families).
    pub fn with_seed(&self, seed: u64) -> ModelSpec {
        let mut spec = self.clone();
        match &mut spec {
            ModelSpec::RandomForest(s) => s.seed = seed,
            ModelSpec::Mlp(s) => s.seed = seed,
            ModelSpec::Knn(_)
            | ModelSpec::LogisticRegression(_)
            | ModelSpec::Svm(_)
            | ModelSpec::GradientBoosting(_) => {}
        }
        spec
    }
}

/// Family-specific fitted parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum ModelParams {
    Knn(knn::KnnModel),
    LogisticRegression(linear::LrModel),
    RandomForest(forest::RfModel),
    Mlp(mlp::MlpModel),
    Svm(svm::SvmModel),
    GradientBoosting(boost::GbModel),
}

/// Training metadata carried alongside the fitted parameters.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub feature_names: Vec<String>,
    pub normalization_id: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainedModel {
    pub family: ModelFamily,
    pub classes: Vec<ColorClass>,
    pub meta: TrainingMeta,
    pub params: ModelParams,
    pub n_features: usize,
}

fn validate_training(x: &[Vec<f64>], y: &[ColorClass]) -> Result<(), ModelError> {
    if x.len() != y.len() {
        return Err(ModelError::ShapeMismatch {
            rows: x.len(),
            labels: y.len(),
        });
    }
    if x.len() < NUM_CLASSES {
        return Err(ModelError::TooFewRows(x.len()));
    }
    if x.iter().any(|row| row.iter().any(|v| !v.is_finite())) {
        return Err(ModelError::NonFiniteInput);
    }
    for color in ColorClass::ALL {
        if !y.contains(&color) {
            return Err(ModelError::ClassMissing(color));
        }
    }
    Ok(())
}

/// Trains a model of the spec's family on (x, y).
pub fn fit(spec: &ModelSpec, x: &[Vec<f64>], y: &[ColorClass]) -> Result<TrainedModel, ModelError> {
    validate_training(x, y)?;
    let labels: Vec<usize> = y.iter().map(|c| c.index()).collect();
    let n_features = x[0].len();
    let params = match spec {
        ModelSpec::Knn(s) => ModelParams::Knn(knn::fit(s, x, &labels)),
        ModelSpec::LogisticRegression(s) => {
            ModelParams::LogisticRegression(linear::fit(s, x, &labels)?)
        }
        ModelSpec::RandomForest(s) => ModelParams::RandomForest(forest::fit(s, x, &labels)),
        ModelSpec::Mlp(s) => ModelParams::Mlp(mlp::fit(s, x, &labels)?),
        ModelSpec::Svm(s) => ModelParams::Svm(svm::fit(s, x, &labels)),
        ModelSpec::GradientBoosting(s) => ModelParams::GradientBoosting(boost::fit(s, x, &labels)),
    };
    Ok(TrainedModel {
        family: spec.family(),
        classes: ColorClass::ALL.to_vec(),
        meta: TrainingMeta::default(),
        params,
        n_features,
    })
}

/// Index of the maximum with lowest-index tie-break.
pub(crate) fn argmax_tie_low(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

impl TrainedModel {
    fn check_dims(&self, x: &[Vec<f64>]) -> Result<(), ModelError> {
        for row in x {
            if row.len() != self.n_features {
                return Err(ModelError::DimensionMismatch {
                    expected: self.n_features,
                    got: row.len(),
                });
            }
        }
        Ok(())
    }

    /// Per-class score rows. Rows sum to 1 for every family (SVM decision
    /// values are passed through a softmax; AUC only needs the ordering).
    pub fn predict_scores(&self, x: &[Vec<f64>]) -> Result<Vec<[f64; NUM_CLASSES]>, ModelError> {
        self.check_dims(x)?;
        let scores = match &self.params {
            ModelParams::Knn(m) => knn::predict_scores(m, x),
            ModelParams::LogisticRegression(m) => linear::predict_scores(m, x),
            ModelParams::RandomForest(m) => forest::predict_scores(m, x),
            ModelParams::Mlp(m) => mlp::predict_scores(m, x),
            ModelParams::Svm(m) => svm::predict_scores(m, x),
            ModelParams::GradientBoosting(m) => boost::predict_scores(m, x),
        };
        Ok(scores)
    }

    /// Hard labels: argmax of scores with lowest-class-index tie-break.
    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<ColorClass>, ModelError> {
        Ok(self
            .predict_scores(x)?
            .iter()
            .map(|row| ColorClass::from_index(argmax_tie_low(row)).unwrap())
            .collect())
    }
}

// ---------------------------------------------------------------------------
// Versioned model files
// ---------------------------------------------------------------------------

pub const MODEL_FILE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    model: TrainedModel,
}

pub fn model_to_json(model: &TrainedModel) -> String {
    serde_json::to_string_pretty(&ModelFile {
        version: MODEL_FILE_VERSION,
        model: model.clone(),
    })
    .expect("model serialization cannot fail")
}

pub fn model_from_json(text: &str) -> Result<TrainedModel, ModelError> {
    let file: ModelFile = serde_json::from_str(text)
        .map_err(|e| ModelError::SingularData(format!("bad model file: {e}")))?;
    if file.version != MODEL_FILE_VERSION {
        return Err(ModelError::SingularData(format!(
            "unsupported model file version {}",
            file.version
        )));
    }
    Ok(file.model)
}

// ---------------------------------------------------------------------------
// Default hyperparameter grids and grid search
// ---------------------------------------------------------------------------

/// The documented per-family grids: KNN k in 4..=8; LR penalty {L1, L2} x C
/// at decade points of [0.01, 100]; RF and GB estimators 10..=100 step 10;
/// SVM C at decade points of [0.001, 100] x gamma at decade points of
/// [0.01, 10]; MLP a single fixed architecture.
pub fn default_grid(family: ModelFamily) -> Vec<ModelSpec> {
    match family {
        ModelFamily::Knn => (4..=8)
            .map(|k| ModelSpec::Knn(knn::KnnSpec { k }))
            .collect(),
        ModelFamily::LogisticRegression => {
            let mut grid = Vec::new();
            for penalty in [linear::Penalty::L1, linear::Penalty::L2] {
                for c in [0.01, 0.1, 1.0, 10.0, 100.0] {
                    grid.push(ModelSpec::LogisticRegression(linear::LrSpec {
                        penalty,
                        c,
                        ..linear::LrSpec::default()
                    }));
                }
            }
            grid
        }
        ModelFamily::RandomForest => (1..=10)
            .map(|i| {
                ModelSpec::RandomForest(forest::RfSpec {
                    n_estimators: i * 10,
                    ..forest::RfSpec::default()
                })
            })
            .collect(),
        ModelFamily::Mlp => vec![ModelSpec::Mlp(mlp::MlpSpec::default())],
        ModelFamily::Svm => {
            let mut grid = Vec::new();
            for c in [0.001, 0.01, 0.1, 1.0, 10.0, 100.0] {
                for gamma in [0.01, 0.1, 1.0, 10.0] {
                    grid.push(ModelSpec::Svm(svm::SvmSpec {
                        c,
                        gamma,
                        ..svm::SvmSpec::default()
                    }));
                }
            }
            grid
        }
        ModelFamily::GradientBoosting => (1..=10)
            .map(|i| {
                ModelSpec::GradientBoosting(boost::GbSpec {
                    n_estimators: i * 10,
                    ..boost::GbSpec::default()
                })
            })
            .collect(),
    }
}

/// One grid point's cross-validation outcome.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridScore {
    pub spec: ModelSpec,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

/// Evaluates every grid point by stratified k-fold mean accuracy on (x, y)
/// (the caller's TRAINING split) and returns the best spec (ties keep the
/// first in grid order) plus the full score table. Each (point, fold) fit
/// derives its own seed from `seed`, so evaluation order cannot matter.
pub fn grid_search(
    grid: &[ModelSpec],
    x: &[Vec<f64>],
    y: &[ColorClass],
    folds: usize,
    seed: u64,
) -> Result<(ModelSpec, Vec<GridScore>), ModelError> {
    if grid.is_empty() {
        return Err(ModelError::EmptyGrid);
    }
    let fold_sets = crate::eval::stratified_kfold(y, folds, crate::rng::derive_seed(seed, &[0]))
        .map_err(|e| ModelError::Split(e.to_string()))?;
    let mut table = Vec::with_capacity(grid.len());
    for (g, spec) in grid.iter().enumerate() {
        let mut fold_accuracies = Vec::with_capacity(fold_sets.len());
        for (f, valid) in fold_sets.iter().enumerate() {
            let valid_set: std::collections::HashSet<usize> = valid.iter().copied().collect();
            let train: Vec<usize> = (0..x.len()).filter(|i| !valid_set.contains(i)).collect();
            let tx: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
            let ty: Vec<ColorClass> = train.iter().map(|&i| y[i]).collect();
            let vx: Vec<Vec<f64>> = valid.iter().map(|&i| x[i].clone()).collect();
            let vy: Vec<ColorClass> = valid.iter().map(|&i| y[i]).collect();
            let fold_seed = crate::rng::derive_seed(seed, &[1, g as u64, f as u64]);
            let model = fit(&spec.with_seed(fold_seed), &tx, &ty)?;
            let pred = model.predict(&vx)?;
            let correct = pred.iter().zip(&vy).filter(|(a, b)| a == b).count();
            fold_accuracies.push(correct as f64 / vy.len() as f64);
        }
        let mean_accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
        table.push(GridScore {
            spec: spec.clone(),
            fold_accuracies,
            mean_accuracy,
        });
    }
    let mut best = 0;
    for (i, score) in table.iter().enumerate().skip(1) {
        if score.mean_accuracy > table[best].mean_accuracy {
            best = i;
        }
    }
    Ok((table[best].spec.clone(), table))
}

pub(crate) fn softmax_row(scores: &[f64; NUM_CLASSES]) -> [f64; NUM_CLASSES] {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; NUM_CLASSES];
    let mut sum = 0.0;
    for (o, &s) in out.iter_mut().zip(scores) {
        *o = (s - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
    out
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::ingest::ColorClass;
    use crate::rng::Rng;

    /// Three well-separated Gaussian clusters in 4-D.
    pub(crate) fn cluster_fixture(
        n_per_class: usize,
        noise: f64,
        seed: u64,
    ) -> (Vec<Vec<f64>>, Vec<ColorClass>) {
        let mut rng = Rng::seed_from_u64(seed);
        let centers = [
            [2.0, 0.0, -1.0, 0.5],
            [-2.0, 1.5, 1.0, -0.5],
            [0.0, -2.0, 2.0, 1.5],
        ];
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..n_per_class {
                x.push(center.iter().map(|m| m + noise * rng.normal()).collect());
                y.push(ColorClass::from_index(c).unwrap());
            }
        }
        (x, y)
    }
}
