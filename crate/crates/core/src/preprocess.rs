//! Variance-window artifact flagging on raw segments and post-transform
//! removal of flagged spans.
//!
//! Flags are computed on the raw signal (50 ms windows, 12 samples at 256 Hz)
//! but applied only after the wavelet transform, so the transform itself sees
//! the full-rate signal. A window flagged on any channel is removed on all
//! channels, keeping the per-channel band-power series aligned.

#[derive(Debug, thiserror::Error)]
pub enum PreprocessError {
    #[error("segment of {len} samples is shorter than one {window_length}-sample window")]
    SegmentTooShort { len: usize, window_length: usize },
    #[error("window length must be at least 2, got {0}")]
    WindowTooSmall(usize),
    #[error("variance threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("mask covers {mask_windows} windows but the series needs {required}")]
    MaskLengthMismatch { mask_windows: usize, required: usize },
    #[error("masks disagree on window count or length")]
    MaskShapeMismatch,
}

/// Per-window artifact flags for one segment. Window `i` covers samples
/// `[i * window_length, min((i + 1) * window_length, n))`; the trailing
/// partial window is evaluated over its actual samples.
#[derive(Clone, Debug, PartialEq)]
pub struct FlagMask {
    pub window_length: usize,
    pub flags: Vec<bool>,
    pub threshold: f64,
}

impl FlagMask {
    /// Number of windows covering a series of length `n`.
    pub fn windows_for(n: usize, window_length: usize) -> usize {
        n.div_ceil(window_length)
    }

    pub fn flagged_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

/// Population variance (n denominator); the choice is immaterial at n = 12
/// but it is fixed so results are reproducible.
pub fn population_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Flags every window whose population variance exceeds `threshold`.
pub fn flag_artifacts(
    segment: &[f64],
    window_length: usize,
    threshold: f64,
) -> Result<FlagMask, PreprocessError> {
    if window_length < 2 {
        return Err(PreprocessError::WindowTooSmall(window_length));
    }
    if segment.len() < window_length {
        return Err(PreprocessError::SegmentTooShort {
            len: segment.len(),
            window_length,
        });
    }
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(PreprocessError::InvalidThreshold(threshold));
    }
    let flags = segment
        .chunks(window_length)
        .map(|w| population_variance(w) > threshold)
        .collect();
    Ok(FlagMask {
        window_length,
        flags,
        threshold,
    })
}

/// The `auto` threshold rule: `multiple` times the median window variance of
/// the segment, floored at the smallest positive double so a constant segment
/// still yields a valid (never-exceeded) threshold.
pub fn auto_threshold(
    segment: &[f64],
    window_length: usize,
    multiple: f64,
) -> Result<f64, PreprocessError> {
    if window_length < 2 {
        return Err(PreprocessError::WindowTooSmall(window_length));
    }
    if segment.len() < window_length {
        return Err(PreprocessError::SegmentTooShort {
            len: segment.len(),
            window_length,
        });
    }
    let mut variances: Vec<f64> = segment
        .chunks(window_length)
        .map(population_variance)
        .collect();
    variances.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = variances.len() / 2;
    let median = if variances.len() % 2 == 1 {
        variances[mid]
    } else {
        0.5 * (variances[mid - 1] + variances[mid])
    };
    Ok((multiple * median).max(f64::MIN_POSITIVE))
}

/// Default multiplier for the auto threshold rule.
pub const AUTO_THRESHOLD_MULTIPLE: f64 = 5.0;
/// Default artifact window: 50 ms at 256 Hz.
pub const ARTIFACT_WINDOW_SAMPLES: usize = 12;

/// ORs masks from several channels into one removal mask.
pub fn union_masks(masks: &[FlagMask]) -> Result<FlagMask, PreprocessError> {
    let first = masks.first().ok_or(PreprocessError::MaskShapeMismatch)?;
    let mut flags = first.flags.clone();
    for mask in &masks[1..] {
        if mask.flags.len() != flags.len() || mask.window_length != first.window_length {
            return Err(PreprocessError::MaskShapeMismatch);
        }
        for (acc, &f) in flags.iter_mut().zip(&mask.flags) {
            *acc |= f;
        }
    }
    Ok(FlagMask {
        window_length: first.window_length,
        flags,
        threshold: first.threshold,
    })
}

/// Deletes the time points of flagged windows from a per-time series (same
/// time base as the raw segment the mask was computed on) and returns the
/// compacted series plus the strictly increasing map of retained indices.
pub fn apply_flags(
    series: &[f64],
    mask: &FlagMask,
) -> Result<(Vec<f64>, Vec<usize>), PreprocessError> {
    let required = FlagMask::windows_for(series.len(), mask.window_length);
    if mask.flags.len() != required {
        return Err(PreprocessError::MaskLengthMismatch {
            mask_windows: mask.flags.len(),
            required,
        });
    }
    let mut kept = Vec::with_capacity(series.len());
    let mut retained = Vec::with_capacity(series.len());
    for (i, &v) in series.iter().enumerate() {
        if !mask.flags[i / mask.window_length] {
            kept.push(v);
            retained.push(i);
        }
    }
    Ok((kept, retained))
}
