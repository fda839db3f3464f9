//! Windowing of band-power series and the 86-dimensional feature schema:
//! 18 spectral + 28 correlation + 40 statistical features per window, with
//! z-score normalization fitted on training rows only.
//!
//! Series order everywhere: alpha then beta, channels TP9, AF7, AF8, TP10
//! within each band. The canonical feature-name list is versioned and shipped
//! as `data/feature_names_v1.txt`.

use std::sync::LazyLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::{self, BandPower};
use crate::ingest::{Channel, ColorClass, EpochedTrial};
use crate::preprocess::{self, FlagMask};

pub const FEATURE_COUNT: usize = 86;
pub const SPECTRAL_COUNT: usize = 18;
pub const CORRELATION_COUNT: usize = 28;
pub const STATISTICAL_COUNT: usize = 40;
/// Band-channel sub-series per window: {alpha, beta} x 4 channels.
pub const N_SERIES: usize = 8;
/// Default histogram bin count for Shannon entropy.
pub const DEFAULT_ENTROPY_BINS: usize = 16;

/// The four window lengths the pipeline supports, in milliseconds.
pub const ALLOWED_WINDOWS_MS: [u32; 4] = [100, 200, 500, 1000];

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("window length {0} ms not in {ALLOWED_WINDOWS_MS:?}")]
    WindowNotAllowed(u32),
    #[error("series of {len} samples is shorter than one {window} -sample window")]
    SeriesTooShort { len: usize, window: usize },
    #[error("band-power series have mismatched lengths")]
    SeriesMisaligned,
    #[error("window contains a constant sub-series (index {series})")]
    DegenerateWindow { series: usize },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("series of {len} samples is too short (need at least {min})")]
    TooShort { len: usize, min: usize },
    #[error("dsp error: {0}")]
    Dsp(#[from] dsp::DspError),
    #[error("preprocess error: {0}")]
    Preprocess(#[from] preprocess::PreprocessError),
    #[error("no epochs to assemble")]
    EmptyDataset,
}

/// Sliding-window configuration. Overlap is fixed at 50%: windows start at
/// multiples of `floor(len/2)` samples. Fractional sample counts round down
/// (200 ms at 256 Hz -> 51 samples).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub length_ms: u32,
    pub sample_rate: f64,
}

impl WindowConfig {
    pub fn new(length_ms: u32, sample_rate: f64) -> Result<Self, FeatureError> {
        if !ALLOWED_WINDOWS_MS.contains(&length_ms) {
            return Err(FeatureError::WindowNotAllowed(length_ms));
        }
        let cfg = WindowConfig {
            length_ms,
            sample_rate,
        };
        if cfg.length_samples() < 4 {
            return Err(FeatureError::TooShort {
                len: cfg.length_samples(),
                min: 4,
            });
        }
        Ok(cfg)
    }

    pub fn length_samples(&self) -> usize {
        (self.length_ms as f64 * self.sample_rate / 1000.0).floor() as usize
    }

    pub fn step_samples(&self) -> usize {
        self.length_samples() / 2
    }
}

/// Eight aligned band-power sub-series cut from one window position.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    /// Start index into the (compacted) band-power series.
    pub start: usize,
    /// `series[b * 4 + c]`: band `b` (0 alpha, 1 beta), channel `c`.
    pub series: [Vec<f64>; N_SERIES],
}

static FEATURE_NAMES: LazyLock<Vec<String>> = LazyLock::new(|| {
    let series: Vec<String> = ["alpha", "beta"]
        .iter()
        .flat_map(|band| {
            Channel::ALL
                .iter()
                .map(move |ch| format!("{band}_{}", ch.name().to_ascii_lowercase()))
        })
        .collect();
    let mut names = Vec::with_capacity(FEATURE_COUNT);
    for s in &series {
        names.push(format!("mean_power_{s}"));
    }
    for s in &series {
        names.push(format!("var_power_{s}"));
    }
    names.push("hemi_diff_alpha".to_string());
    names.push("hemi_diff_beta".to_string());
    for i in 0..N_SERIES {
        for j in (i + 1)..N_SERIES {
            names.push(format!("corr_{}_{}", series[i], series[j]));
        }
    }
    for s in &series {
        names.push(format!("kurtosis_{s}"));
    }
    for s in &series {
        names.push(format!("skewness_{s}"));
    }
    for s in &series {
        names.push(format!("entropy_{s}"));
    }
    for s in &series {
        names.push(format!("mobility_{s}"));
    }
    for s in &series {
        names.push(format!("complexity_{s}"));
    }
    assert_eq!(names.len(), FEATURE_COUNT);
    names
});

/// The canonical, globally fixed 86-name list in column order.
pub fn feature_names() -> &'static [String] {
    &FEATURE_NAMES
}

/// The shipped v1 feature-name manifest (one name per line).
pub const FEATURE_NAME_MANIFEST_V1: &str = include_str!("../data/feature_names_v1.txt");

/// One 86-dimensional feature row with provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: ColorClass,
    pub subject_id: u32,
    pub trial_id: u32,
    pub window_index: u32,
}

/// Per-column z-score parameters. Population standard deviation; columns with
/// zero spread divide by 1 so they map to exactly 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    pub fn fit<'a, I>(rows: I) -> Normalization
    where
        I: Iterator<Item = &'a [f64]> + Clone,
    {
        let mut count = 0usize;
        let mut mean = vec![0.0; FEATURE_COUNT];
        for row in rows.clone() {
            count += 1;
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        assert!(count > 0, "cannot fit normalization on zero rows");
        let inv = 1.0 / count as f64;
        mean.iter_mut().for_each(|m| *m *= inv);
        let mut var = vec![0.0; FEATURE_COUNT];
        for row in rows {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                let d = v - m;
                *s += d * d;
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s * inv).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Normalization { mean, std }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// A set of feature rows plus the normalization fitted on them (if any).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub rows: Vec<FeatureVector>,
    pub normalization: Option<Normalization>,
    /// Windows rejected because a sub-series was constant.
    pub dropped_windows: usize,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn labels(&self) -> Vec<ColorClass> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn values(&self) -> Vec<&[f64]> {
        self.rows.iter().map(|r| r.values.as_slice()).collect()
    }
}

// ---------------------------------------------------------------------------
// Windowing
// ---------------------------------------------------------------------------

/// Cuts the four channels' aligned alpha/beta series into 50%-overlapping
/// windows. The trailing partial window is discarded.
pub fn slide_windows(bp: &[BandPower; 4], cfg: &WindowConfig) -> Result<Vec<Window>, FeatureError> {
    let n = bp[0].alpha.len();
    for b in bp.iter() {
        if b.alpha.len() != n || b.beta.len() != n {
            return Err(FeatureError::SeriesMisaligned);
        }
    }
    let len = cfg.length_samples();
    if n < len {
        return Err(FeatureError::SeriesTooShort { len: n, window: len });
    }
    let step = cfg.step_samples();
    let mut windows = Vec::new();
    let mut start = 0usize;
    while start + len <= n {
        let series = std::array::from_fn(|s| {
            let ch = s % 4;
            let src = if s < 4 { &bp[ch].alpha } else { &bp[ch].beta };
            src[start..start + len].to_vec()
        });
        windows.push(Window { start, series });
        start += step;
    }
    Ok(windows)
}

// ---------------------------------------------------------------------------
// Feature computations
// ---------------------------------------------------------------------------

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn central_moments(xs: &[f64]) -> (f64, f64, f64, f64) {
    let m = mean(xs);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let n = xs.len() as f64;
    (m, m2 / n, m3 / n, m4 / n)
}

/// 18 spectral features: per band x channel mean power (8) and population
/// variance of power (8), then per band the absolute difference between the
/// left-hemisphere mean (TP9, AF7) and the right-hemisphere mean (TP10, AF8).
pub fn spectral_features(w: &Window) -> [f64; SPECTRAL_COUNT] {
    let mut out = [0.0; SPECTRAL_COUNT];
    let mut means = [0.0; N_SERIES];
    for (s, series) in w.series.iter().enumerate() {
        let (m, var, _, _) = central_moments(series);
        means[s] = m;
        out[s] = m;
        out[N_SERIES + s] = var;
    }
    for band in 0..2 {
        // Channel order is TP9, AF7, AF8, TP10: left = {0, 1}, right = {3, 2}.
        let left = 0.5 * (means[band * 4] + means[band * 4 + 1]);
        let right = 0.5 * (means[band * 4 + 3] + means[band * 4 + 2]);
        out[2 * N_SERIES + band] = (left - right).abs();
    }
    out
}

/// Pearson correlation; pairs involving a zero-variance series are defined
/// as 0.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let ma = mean(a);
    let mb = mean(b);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va <= 0.0 || vb <= 0.0 {
        return 0.0;
    }
    cov / (va.sqrt() * vb.sqrt())
}

/// 28 pairwise correlations over the 8 band-channel series, unordered pairs
/// (i, j), i < j, in series order.
pub fn correlation_features(w: &Window) -> [f64; CORRELATION_COUNT] {
    let mut out = [0.0; CORRELATION_COUNT];
    let mut k = 0;
    for i in 0..N_SERIES {
        for j in (i + 1)..N_SERIES {
            out[k] = pearson(&w.series[i], &w.series[j]);
            k += 1;
        }
    }
    out
}

/// Shannon entropy of an equal-width histogram over [min, max] in bits.
/// A constant series has a single occupied bin and entropy 0.
pub fn shannon_entropy(y: &[f64], bins: usize) -> Result<f64, FeatureError> {
    if y.len() < bins {
        return Err(FeatureError::TooShort {
            len: y.len(),
            min: bins,
        });
    }
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Ok(0.0);
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in y {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n = y.len() as f64;
    let entropy = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    Ok(entropy)
}

fn forward_diff(y: &[f64], sample_rate: f64) -> Vec<f64> {
    y.windows(2).map(|w| (w[1] - w[0]) * sample_rate).collect()
}

/// Hjorth mobility and complexity. The derivative is the forward first
/// difference scaled by the sample rate; mobility is
/// `sqrt(var(dy) / var(y))` and complexity is `mobility(dy) / mobility(y)`.
pub fn hjorth(y: &[f64], sample_rate: f64) -> Result<(f64, f64), FeatureError> {
    if y.len() < 3 {
        return Err(FeatureError::TooShort { len: y.len(), min: 3 });
    }
    let var_y = preprocess::population_variance(y);
    if var_y <= 0.0 {
        return Err(FeatureError::ZeroVariance);
    }
    let dy = forward_diff(y, sample_rate);
    let var_dy = preprocess::population_variance(&dy);
    if var_dy <= 0.0 {
        return Err(FeatureError::ZeroVariance);
    }
    let ddy = forward_diff(&dy, sample_rate);
    let var_ddy = preprocess::population_variance(&ddy);
    let mobility = (var_dy / var_y).sqrt();
    let mobility_dy = (var_ddy / var_dy).sqrt();
    Ok((mobility, mobility_dy / mobility))
}

/// 40 statistical features: per band x channel Fisher excess kurtosis (8),
/// skewness (8), Shannon entropy (8), Hjorth mobility (8) and complexity (8).
/// A constant sub-series makes the window degenerate and rejects the row.
pub fn statistical_features(
    w: &Window,
    sample_rate: f64,
    entropy_bins: usize,
) -> Result<[f64; STATISTICAL_COUNT], FeatureError> {
    let mut out = [0.0; STATISTICAL_COUNT];
    for (s, series) in w.series.iter().enumerate() {
        if series.len() < 4 {
            return Err(FeatureError::TooShort {
                len: series.len(),
                min: 4,
            });
        }
        let (_, m2, m3, m4) = central_moments(series);
        if m2 <= 0.0 {
            return Err(FeatureError::DegenerateWindow { series: s });
        }
        out[s] = m4 / (m2 * m2) - 3.0;
        out[N_SERIES + s] = m3 / m2.powf(1.5);
        out[2 * N_SERIES + s] = shannon_entropy(series, entropy_bins.min(series.len()))?;
        let (mobility, complexity) =
            hjorth(series, sample_rate).map_err(|e| match e {
                FeatureError::ZeroVariance => FeatureError::DegenerateWindow { series: s },
                other => other,
            })?;
        out[3 * N_SERIES + s] = mobility;
        out[4 * N_SERIES + s] = complexity;
    }
    Ok(out)
}

/// Concatenates the three feature groups in canonical order.
pub fn compute_feature_vector(
    w: &Window,
    sample_rate: f64,
    entropy_bins: usize,
) -> Result<Vec<f64>, FeatureError> {
    let stat = statistical_features(w, sample_rate, entropy_bins)?;
    let mut values = Vec::with_capacity(FEATURE_COUNT);
    values.extend_from_slice(&spectral_features(w));
    values.extend_from_slice(&correlation_features(w));
    values.extend_from_slice(&stat);
    debug_assert_eq!(values.len(), FEATURE_COUNT);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(FeatureError::DegenerateWindow { series: 0 });
    }
    Ok(values)
}

// ---------------------------------------------------------------------------
// Pipeline: epochs -> feature matrix
// ---------------------------------------------------------------------------

/// How the artifact threshold is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ArtifactThreshold {
    /// Five times the median window variance, per channel.
    Auto,
    Fixed(f64),
}

/// Everything the epoch -> features pipeline needs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineParams {
    pub window: WindowConfig,
    pub n_cycles: f64,
    pub artifact: ArtifactThreshold,
    pub artifact_window: usize,
    pub entropy_bins: usize,
    /// Worker threads for per-epoch extraction; 1 means fully sequential.
    pub jobs: usize,
}

impl PipelineParams {
    pub fn new(window_ms: u32) -> Result<Self, FeatureError> {
        Ok(PipelineParams {
            window: WindowConfig::new(window_ms, crate::ingest::SAMPLE_RATE)?,
            n_cycles: 7.0,
            artifact: ArtifactThreshold::Auto,
            artifact_window: preprocess::ARTIFACT_WINDOW_SAMPLES,
            entropy_bins: DEFAULT_ENTROPY_BINS,
            jobs: 1,
        })
    }
}

/// Per-epoch result of the transform stage: compacted band power plus the
/// retained-index map for traceability.
pub struct EpochBandPower {
    pub band_power: [BandPower; 4],
    pub retained: Vec<usize>,
    pub flagged_windows: usize,
}

/// Runs flagging, CWT, band power and flag removal for one epoch. Flags are
/// computed on the raw segments but applied only after the transform, and a
/// window flagged on any channel is removed on all channels.
///
/// Each segment is demeaned before the transform: raw samples sit on a large
/// ADC offset (~800 uV) which would otherwise leak into every band through
/// the zero-padded convolution edges. Flagging is variance-based and
/// unaffected.
pub fn epoch_band_power(
    epoch: &EpochedTrial,
    params: &PipelineParams,
) -> Result<EpochBandPower, FeatureError> {
    let sr = crate::ingest::SAMPLE_RATE;
    let freqs = dsp::default_freq_grid();
    let mut masks: Vec<FlagMask> = Vec::with_capacity(4);
    let mut raw_bp: Vec<BandPower> = Vec::with_capacity(4);
    for ch in Channel::ALL {
        let segment = &epoch.channel_segments[ch.index()];
        let threshold = match params.artifact {
            ArtifactThreshold::Fixed(t) => t,
            ArtifactThreshold::Auto => preprocess::auto_threshold(
                segment,
                params.artifact_window,
                preprocess::AUTO_THRESHOLD_MULTIPLE,
            )?,
        };
        masks.push(preprocess::flag_artifacts(
            segment,
            params.artifact_window,
            threshold,
        )?);
        let offset = segment.iter().sum::<f64>() / segment.len() as f64;
        let centered: Vec<f64> = segment.iter().map(|v| v - offset).collect();
        let spec = dsp::cwt_power(&centered, &freqs, sr, params.n_cycles, ch)?;
        raw_bp.push(dsp::band_power(&spec)?);
    }
    let union = preprocess::union_masks(&masks)?;
    let flagged_windows = union.flagged_count();
    let mut retained = Vec::new();
    let band_power = std::array::from_fn(|c| {
        let (alpha, kept) = preprocess::apply_flags(&raw_bp[c].alpha, &union)
            .expect("mask computed from the same segments");
        let (beta, _) = preprocess::apply_flags(&raw_bp[c].beta, &union)
            .expect("mask computed from the same segments");
        retained = kept;
        BandPower {
            alpha,
            beta,
            channel: Channel::ALL[c],
        }
    });
    Ok(EpochBandPower {
        band_power,
        retained,
        flagged_windows,
    })
}

/// Feature rows of one epoch plus its dropped-window count.
type EpochRows = (Vec<(ColorClass, Vec<f64>)>, usize);

fn epoch_rows(epoch: &EpochedTrial, params: &PipelineParams) -> Result<EpochRows, FeatureError> {
    let ebp = epoch_band_power(epoch, params)?;
    let windows = slide_windows(&ebp.band_power, &params.window)?;
    let mut rows = Vec::with_capacity(windows.len());
    let mut dropped = 0usize;
    for w in &windows {
        match compute_feature_vector(w, crate::ingest::SAMPLE_RATE, params.entropy_bins) {
            Ok(values) => rows.push((epoch.label, values)),
            Err(FeatureError::DegenerateWindow { .. }) => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((rows, dropped))
}

/// Extracts one feature row per surviving window of every epoch, in dataset
/// order. Values are raw; fit a `Normalization` on training rows afterwards.
/// `window_index` counts windows within each (subject, trial).
pub fn assemble(
    epochs: &[EpochedTrial],
    params: &PipelineParams,
) -> Result<FeatureMatrix, FeatureError> {
    if epochs.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    let per_epoch: Vec<Result<EpochRows, FeatureError>> =
        if params.jobs > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(params.jobs)
                .build()
                .expect("failed to build worker pool");
            pool.install(|| {
                epochs
                    .par_iter()
                    .map(|ep| epoch_rows(ep, params))
                    .collect()
            })
        } else {
            epochs.iter().map(|ep| epoch_rows(ep, params)).collect()
        };

    let mut rows = Vec::new();
    let mut dropped_windows = 0usize;
    let mut window_counter: std::collections::HashMap<(u32, u32), u32> =
        std::collections::HashMap::new();
    for (epoch, result) in epochs.iter().zip(per_epoch) {
        let (epoch_rows, dropped) = result?;
        dropped_windows += dropped;
        let counter = window_counter
            .entry((epoch.subject_id, epoch.trial_id))
            .or_insert(0);
        for (label, values) in epoch_rows {
            rows.push(FeatureVector {
                values,
                label,
                subject_id: epoch.subject_id,
                trial_id: epoch.trial_id,
                window_index: *counter,
            });
            *counter += 1;
        }
    }
    Ok(FeatureMatrix {
        rows,
        normalization: None,
        dropped_windows,
    })
}

// ---------------------------------------------------------------------------
// Feature matrix CSV
// ---------------------------------------------------------------------------

/// Writes the matrix as CSV: 86 canonical names + `label,subject,trial,window`.
pub fn feature_matrix_csv(matrix: &FeatureMatrix) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    out.push_str(&feature_names().join(","));
    out.push_str(",label,subject,trial,window\n");
    for row in &matrix.rows {
        let mut first = true;
        for v in &row.values {
            if !first {
                out.push(',');
            }
            let _ = write!(out, "{v}");
            first = false;
        }
        let _ = writeln!(
            out,
            ",{},{},{},{}",
            row.label, row.subject_id, row.trial_id, row.window_index
        );
    }
    out
}

/// Parses a feature CSV produced by `feature_matrix_csv`.
pub fn parse_feature_matrix_csv(text: &str) -> Result<FeatureMatrix, FeatureError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(FeatureError::EmptyDataset)?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() != FEATURE_COUNT + 4 {
        return Err(FeatureError::EmptyDataset);
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != FEATURE_COUNT + 4 {
            return Err(FeatureError::EmptyDataset);
        }
        let values: Vec<f64> = fields[..FEATURE_COUNT]
            .iter()
            .map(|s| s.parse().map_err(|_| FeatureError::EmptyDataset))
            .collect::<Result<_, _>>()?;
        let label: ColorClass = fields[FEATURE_COUNT]
            .parse()
            .map_err(|_| FeatureError::EmptyDataset)?;
        let subject_id = fields[FEATURE_COUNT + 1]
            .parse()
            .map_err(|_| FeatureError::EmptyDataset)?;
        let trial_id = fields[FEATURE_COUNT + 2]
            .parse()
            .map_err(|_| FeatureError::EmptyDataset)?;
        let window_index = fields[FEATURE_COUNT + 3]
            .parse()
            .map_err(|_| FeatureError::EmptyDataset)?;
        rows.push(FeatureVector {
            values,
            label,
            subject_id,
            trial_id,
            window_index,
        });
    }
    Ok(FeatureMatrix {
        rows,
        normalization: None,
        dropped_windows: 0,
    })
}
