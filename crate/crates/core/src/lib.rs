//! Four-channel EEG color-stimulus classification pipeline.
//!
//! The crate covers the full path from raw recordings to cross-validated
//! classification reports:
//!
//! ```text
//! recording CSV (+ schedule sidecar)
//!   │
//!   ├─ ingest        parse, start-marker detection, 2 s epoching,
//!   │                seeded synthetic generator
//!   ├─ preprocess    50 ms variance-window artifact flags
//!   ├─ dsp           radix-2 FFT, complex Morlet CWT over 8-30 Hz,
//!   │                alpha/beta band power, spectrogram CSV
//!   ├─ features      50%-overlap windows -> 86 features
//!   │                (18 spectral + 28 correlation + 40 statistical),
//!   │                z-score fit on training rows only
//!   ├─ reduce        forward selection and stacked autoencoder, both to 10
//!   ├─ models        KNN, logistic regression, random forest, MLP,
//!   │                RBF SVM (SMO), gradient boosting + grid search
//!   └─ eval          accuracy / pairwise ROC-AUC / MCC, stratified 5-fold
//!                    and leave-one-subject-out CV, experiment grid reports
//! ```
//!
//! Everything randomized takes an explicit integer seed and uses the
//! portable generator in [`rng`], so outputs are reproducible run to run.

pub mod dsp;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod models;
pub mod preprocess;
pub mod reduce;
pub mod rng;

pub use dsp::{BandPower, MorletParams, PowerSpectrogram};
pub use eval::{CellReport, ConfusionMatrix, ExperimentConfig, ExperimentReport, RocCurve};
pub use features::{FeatureMatrix, FeatureVector, Normalization, PipelineParams, WindowConfig};
pub use ingest::{
    Channel, ClassBandGains, ColorClass, EpochedTrial, RawRecording, StimulusProtocol,
    StimulusSchedule,
};
pub use models::{ModelFamily, ModelSpec, TrainedModel};
pub use reduce::{AeConfig, AutoencoderModel, FeatureSubset};
