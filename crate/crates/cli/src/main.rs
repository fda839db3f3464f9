//! `eegcolor` — color-stimulus EEG pipeline CLI.
//!
//! Commands compose through files only: recordings and schedule sidecars go
//! in, epochs/features/models/reports come out, and every run drops a
//! manifest sufficient to reproduce its outputs bit-identically.
//!
//! Exit codes: 0 success, 1 validation error (message names the offending
//! flag), 2 runtime failure (message names the failure-manifest path).

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Bad flag or config value; the message names it.
    Validation(String),
    /// Failure mid-run; a failure manifest has been written to `manifest`.
    Runtime { message: String, manifest: PathBuf },
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "eegcolor",
    version,
    about = "Four-channel EEG color-stimulus classification pipeline",
    propagate_version = true
)]
pub struct Cli {
    /// Key=value config file; explicit flags override its entries.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate synthetic recordings + schedule sidecars for a study.
    Synth(SynthArgs),
    /// Parse one recording + schedule into a labeled epochs file.
    Ingest(IngestArgs),
    /// Extract the 86-column feature matrix from a directory of recordings.
    Extract(ExtractArgs),
    /// Emit the power spectrogram of one epoch channel as CSV.
    Spectrogram(SpectrogramArgs),
    /// Reduce a feature matrix to k features (forward selection or autoencoder).
    Reduce(ReduceArgs),
    /// Train one model family on a feature matrix, optionally grid-searched.
    Train(TrainArgs),
    /// Cross-validate one family/feature-set/regime cell and write reports.
    Evaluate(EvaluateArgs),
    /// Run the full window x feature-set x regime x family grid.
    Experiment(ExperimentArgs),
    /// Render human-readable tables and a best-cell summary from report.json.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 8)]
    pub subjects: u32,
    #[arg(long, default_value_t = 5)]
    pub trials: u32,
    /// Stimulus repetitions per color per trial.
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sigma: f64,
    /// Per-color alpha,beta sinusoid amplitudes in microvolts.
    #[arg(long, default_value = "3.0,0.6")]
    pub gain_red: String,
    #[arg(long, default_value = "0.6,3.0")]
    pub gain_green: String,
    #[arg(long, default_value = "1.8,1.8")]
    pub gain_blue: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[arg(long)]
    pub recording: PathBuf,
    #[arg(long)]
    pub schedule: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub subject: u32,
    #[arg(long, default_value_t = 1)]
    pub trial: u32,
    #[arg(long, default_value = "epochs.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// Directory of sNN_tMM_recording.csv / sNN_tMM_schedule.csv pairs.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Window length in ms; one of 100, 200, 500, 1000.
    #[arg(long)]
    pub window: Option<u32>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Variance threshold for artifact flagging: a number or `auto`.
    #[arg(long)]
    pub artifact_threshold: Option<String>,
    #[arg(long)]
    pub n_cycles: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SpectrogramArgs {
    /// Epochs CSV produced by `ingest`.
    #[arg(long)]
    pub epochs: PathBuf,
    /// Zero-based epoch index within the file.
    #[arg(long)]
    pub epoch: usize,
    /// Channel name: TP9, AF7, AF8 or TP10.
    #[arg(long)]
    pub channel: String,
    #[arg(long)]
    pub n_cycles: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReduceArgs {
    #[arg(long)]
    pub features: PathBuf,
    /// `forward` (wrapper selection) or `ae` (stacked autoencoder).
    #[arg(long)]
    pub method: String,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Autoencoder training epochs (ae method only).
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    /// knn, lr, rf, mlp, svm or gb.
    #[arg(long)]
    pub family: String,
    /// `default` (the documented per-family grid) or `none` (default spec).
    #[arg(long, default_value = "default")]
    pub grid: String,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long, default_value = "features.csv")]
    pub features: PathBuf,
    #[arg(long, default_value = "rf")]
    pub family: String,
    /// all, forward10 or ae10.
    #[arg(long, default_value = "all")]
    pub feature_set: String,
    /// intra, inter or both.
    #[arg(long, default_value = "intra")]
    pub regime: String,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Window label (ms) recorded in report paths; purely descriptive here.
    #[arg(long, default_value_t = 200)]
    pub window: u32,
    /// Use one intra-subject fold per trial instead of pooled stratification.
    #[arg(long)]
    pub group_by_trial: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// Directory of recordings + schedules (as written by `synth`).
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "100,200,500,1000")]
    pub windows: String,
    #[arg(long, default_value = "all,forward10,ae10")]
    pub feature_sets: String,
    #[arg(long, default_value = "knn,svm,lr,rf,mlp,gb")]
    pub families: String,
    #[arg(long, default_value = "intra,inter")]
    pub regimes: String,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for grid evaluation (default: logical cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub artifact_threshold: Option<String>,
    #[arg(long)]
    pub n_cycles: Option<f64>,
    #[arg(long)]
    pub group_by_trial: bool,
    /// Skip ROC curve emission for the best intra cell.
    #[arg(long)]
    pub no_roc: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Report directory containing report.json (from evaluate/experiment).
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Summary file; also printed to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help/version are not errors.
            if err.use_stderr() {
                eprintln!("{err}");
                return ExitCode::from(1);
            }
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    let config = match manifest::load_config(cli.config.as_deref()) {
        Ok(config) => config,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Synth(args) => commands::synth(args, &config),
        Command::Ingest(args) => commands::ingest(args, &config),
        Command::Extract(args) => commands::extract(args, &config),
        Command::Spectrogram(args) => commands::spectrogram(args, &config),
        Command::Reduce(args) => commands::reduce(args, &config),
        Command::Train(args) => commands::train(args, &config),
        Command::Evaluate(args) => commands::evaluate(args, &config),
        Command::Experiment(args) => commands::experiment(args, &config),
        Command::Report(args) => commands::report(args, &config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime { message, manifest }) => {
            eprintln!("error: {message}");
            eprintln!("failure manifest: {}", manifest.display());
            ExitCode::from(2)
        }
    }
}
