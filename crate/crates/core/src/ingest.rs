//! Recording ingestion: Mind-Monitor-style CSV parsing, start-marker
//! detection, epoching against a stimulus schedule, and a seeded synthetic
//! recording generator for end-to-end testing.
//!
//! Recording CSV schema (UTF-8, LF or CRLF):
//! `TimeStamp,RAW_TP9,RAW_AF7,RAW_AF8,RAW_TP10,Marker` where `Marker` is
//! empty, `jaw_clench`, or `eye_blink`. Rows whose four channel cells do not
//! all parse as numbers are rejected (markers on such rows are still kept).
//! Schedule sidecar schema: `onset_seconds,label` with labels Red/Green/Blue.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::rng::{derive_seed, Rng};

/// Fixed acquisition rate of the headband.
pub const SAMPLE_RATE: f64 = 256.0;
/// Samples per two-second stimulus epoch at 256 Hz.
pub const EPOCH_SAMPLES: usize = 512;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("timestamps are not strictly increasing at row {row}")]
    NonMonotoneTimestamps { row: usize },
    #[error("recording contains no sample rows")]
    EmptyRecording,
    #[error("no jaw clench start marker found")]
    NoStartMarker,
    #[error("recording too short: only {fit} of {requested} epochs fit")]
    RecordingTooShort { fit: usize, requested: usize },
    #[error("invalid {what} at row {row}: {value:?}")]
    InvalidValue {
        what: &'static str,
        row: usize,
        value: String,
    },
    #[error("invalid stimulus protocol: {0}")]
    InvalidProtocol(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Stimulus color classes in the fixed order Red = 0, Green = 1, Blue = 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ColorClass {
    Red,
    Green,
    Blue,
}

impl ColorClass {
    pub const ALL: [ColorClass; 3] = [ColorClass::Red, ColorClass::Green, ColorClass::Blue];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        match self {
            ColorClass::Red => 0,
            ColorClass::Green => 1,
            ColorClass::Blue => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<ColorClass> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ColorClass::Red => "Red",
            ColorClass::Green => "Green",
            ColorClass::Blue => "Blue",
        }
    }
}

impl fmt::Display for ColorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ColorClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "Red" | "red" | "R" => Ok(ColorClass::Red),
            "Green" | "green" | "G" => Ok(ColorClass::Green),
            "Blue" | "blue" | "B" => Ok(ColorClass::Blue),
            other => Err(format!("unknown color label {other:?}")),
        }
    }
}

/// Electrode channels in recording order: TP9, AF7 (left), AF8, TP10 (right).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    Tp9,
    Af7,
    Af8,
    Tp10,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::Tp9, Channel::Af7, Channel::Af8, Channel::Tp10];
    pub const LEFT: [Channel; 2] = [Channel::Tp9, Channel::Af7];
    pub const RIGHT: [Channel; 2] = [Channel::Tp10, Channel::Af8];

    pub fn index(self) -> usize {
        match self {
            Channel::Tp9 => 0,
            Channel::Af7 => 1,
            Channel::Af8 => 2,
            Channel::Tp10 => 3,
        }
    }

    /// Column name in the recording CSV.
    pub fn column_name(self) -> &'static str {
        match self {
            Channel::Tp9 => "RAW_TP9",
            Channel::Af7 => "RAW_AF7",
            Channel::Af8 => "RAW_AF8",
            Channel::Tp10 => "RAW_TP10",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Tp9 => "TP9",
            Channel::Af7 => "AF7",
            Channel::Af8 => "AF8",
            Channel::Tp10 => "TP10",
        }
    }
}

impl FromStr for Channel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "TP9" | "RAW_TP9" => Ok(Channel::Tp9),
            "AF7" | "RAW_AF7" => Ok(Channel::Af7),
            "AF8" | "RAW_AF8" => Ok(Channel::Af8),
            "TP10" | "RAW_TP10" => Ok(Channel::Tp10),
            other => Err(format!("unknown channel {other:?}")),
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarkerKind {
    JawClench,
    EyeBlink,
}

impl MarkerKind {
    pub fn name(self) -> &'static str {
        match self {
            MarkerKind::JawClench => "jaw_clench",
            MarkerKind::EyeBlink => "eye_blink",
        }
    }

    fn parse(s: &str) -> Option<MarkerKind> {
        match s.trim() {
            "jaw_clench" => Some(MarkerKind::JawClench),
            "eye_blink" => Some(MarkerKind::EyeBlink),
            _ => None,
        }
    }
}

/// A continuous 4-channel recording. Samples are treated as uniformly spaced
/// at `sample_rate`; timestamps serve only to align markers.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRecording {
    pub sample_rate: f64,
    /// Channel series in `Channel::ALL` order; equal lengths.
    pub channels: [Vec<f64>; 4],
    pub timestamps: Vec<f64>,
    pub markers: Vec<(f64, MarkerKind)>,
}

impl RawRecording {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

/// The stimulus presentation protocol for one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StimulusProtocol {
    pub colors: Vec<ColorClass>,
    pub stimulus_duration: f64,
    pub baseline_duration: f64,
    pub repetitions_per_color: usize,
    pub trial_duration: f64,
}

impl StimulusProtocol {
    /// The standard protocol: 3 colors x 20 repetitions x (2 s stimulus +
    /// 2 s black baseline) = 240 s.
    pub fn standard() -> Self {
        StimulusProtocol {
            colors: ColorClass::ALL.to_vec(),
            stimulus_duration: 2.0,
            baseline_duration: 2.0,
            repetitions_per_color: 20,
            trial_duration: 240.0,
        }
    }

    /// Same structure with a different repetition count (durations rescale).
    pub fn with_repetitions(reps: usize) -> Self {
        let mut p = Self::standard();
        p.repetitions_per_color = reps;
        p.trial_duration = reps as f64 * p.colors.len() as f64
            * (p.stimulus_duration + p.baseline_duration);
        p
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let expected = self.repetitions_per_color as f64
            * self.colors.len() as f64
            * (self.stimulus_duration + self.baseline_duration);
        if (expected - self.trial_duration).abs() > 1e-9 {
            return Err(IngestError::InvalidProtocol(format!(
                "repetitions x colors x (stimulus + baseline) = {expected}, \
                 but trial_duration = {}",
                self.trial_duration
            )));
        }
        if self.stimulus_duration <= 0.0 || self.baseline_duration < 0.0 {
            return Err(IngestError::InvalidProtocol("non-positive duration".into()));
        }
        Ok(())
    }

    pub fn epochs_per_trial(&self) -> usize {
        self.repetitions_per_color * self.colors.len()
    }
}

/// Ordered stimulus onsets (seconds relative to the start marker) and labels
/// for one trial. Carried in a sidecar file; the color order is randomized at
/// generation time, not inferred from the EEG.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StimulusSchedule {
    pub entries: Vec<(f64, ColorClass)>,
}

impl StimulusSchedule {
    /// Builds the randomized schedule for a protocol: a seeded shuffle of the
    /// label multiset, with onsets spaced by stimulus + baseline durations.
    pub fn randomized(protocol: &StimulusProtocol, seed: u64) -> Result<Self, IngestError> {
        protocol.validate()?;
        let mut labels = Vec::with_capacity(protocol.epochs_per_trial());
        for &color in &protocol.colors {
            labels.extend(std::iter::repeat_n(color, protocol.repetitions_per_color));
        }
        let mut rng = Rng::seed_from_u64(seed);
        rng.shuffle(&mut labels);
        let slot = protocol.stimulus_duration + protocol.baseline_duration;
        let entries = labels
            .into_iter()
            .enumerate()
            .map(|(i, label)| (i as f64 * slot, label))
            .collect();
        Ok(StimulusSchedule { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One labeled two-second stimulus segment: 4 channels x 512 samples.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochedTrial {
    pub label: ColorClass,
    pub channel_segments: [Vec<f64>; 4],
    pub subject_id: u32,
    pub trial_id: u32,
    pub epoch_index: u32,
}

// ---------------------------------------------------------------------------
// Recording CSV
// ---------------------------------------------------------------------------

const TIMESTAMP_COLUMN: &str = "TimeStamp";
const MARKER_COLUMN: &str = "Marker";

/// Parses a recording CSV (schema at module top). Sample rows need all four
/// channel values numeric; any row can carry a marker. Rows that are neither
/// a valid sample nor a marker are dropped.
pub fn parse_recording(csv_text: &str) -> Result<RawRecording, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(csv_text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let ts_idx = col(TIMESTAMP_COLUMN)
        .ok_or_else(|| IngestError::MissingColumn(TIMESTAMP_COLUMN.into()))?;
    let mut ch_idx = [0usize; 4];
    for ch in Channel::ALL {
        ch_idx[ch.index()] = col(ch.column_name())
            .ok_or_else(|| IngestError::MissingColumn(ch.column_name().into()))?;
    }
    let marker_idx = col(MARKER_COLUMN);

    let mut channels: [Vec<f64>; 4] = Default::default();
    let mut timestamps = Vec::new();
    let mut markers = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        let ts: f64 = match record.get(ts_idx).map(str::trim) {
            Some(s) if !s.is_empty() => s.parse().map_err(|_| IngestError::InvalidValue {
                what: "timestamp",
                row: row_no + 2,
                value: s.to_string(),
            })?,
            _ => continue,
        };
        let marker = marker_idx
            .and_then(|i| record.get(i))
            .and_then(MarkerKind::parse);
        if let Some(kind) = marker {
            markers.push((ts, kind));
        }
        let values: Option<Vec<f64>> = ch_idx
            .iter()
            .map(|&i| record.get(i).and_then(|s| s.trim().parse::<f64>().ok()))
            .collect();
        // Non-numeric channel cells reject the sample row (markers above are
        // already kept); Mind Monitor writes marker-only rows this way.
        if let Some(values) = values {
            if !timestamps.is_empty() && ts <= *timestamps.last().unwrap() {
                return Err(IngestError::NonMonotoneTimestamps { row: row_no + 2 });
            }
            timestamps.push(ts);
            for (series, v) in channels.iter_mut().zip(values) {
                series.push(v);
            }
        }
    }
    if timestamps.is_empty() {
        return Err(IngestError::EmptyRecording);
    }
    Ok(RawRecording {
        sample_rate: SAMPLE_RATE,
        channels,
        timestamps,
        markers,
    })
}

/// Renders a recording in the same CSV schema `parse_recording` reads.
/// Markers coinciding with a sample timestamp ride on that row; markers
/// between samples get their own marker-only row. `parse(serialize(r)) == r`.
pub fn serialize_recording(rec: &RawRecording) -> String {
    let mut out = String::new();
    out.push_str("TimeStamp,RAW_TP9,RAW_AF7,RAW_AF8,RAW_TP10,Marker\n");
    let mut markers = rec.markers.iter().peekable();
    for (i, &ts) in rec.timestamps.iter().enumerate() {
        // Marker-only rows for markers strictly before this sample.
        while let Some(&&(mts, kind)) = markers.peek() {
            if mts < ts {
                let _ = writeln!(out, "{mts},,,,,{}", kind.name());
                markers.next();
            } else {
                break;
            }
        }
        let mut marker_cell = "";
        if let Some(&&(mts, kind)) = markers.peek() {
            if mts == ts {
                marker_cell = kind.name();
                markers.next();
            }
        }
        let _ = writeln!(
            out,
            "{ts},{},{},{},{},{marker_cell}",
            rec.channels[0][i], rec.channels[1][i], rec.channels[2][i], rec.channels[3][i]
        );
    }
    for &(mts, kind) in markers {
        let _ = writeln!(out, "{mts},,,,,{}", kind.name());
    }
    out
}

// ---------------------------------------------------------------------------
// Schedule CSV
// ---------------------------------------------------------------------------

pub fn parse_schedule(csv_text: &str) -> Result<StimulusSchedule, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(csv_text.as_bytes());
    let headers = reader.headers()?.clone();
    let onset_idx = headers
        .iter()
        .position(|h| h.trim() == "onset_seconds")
        .ok_or_else(|| IngestError::MissingColumn("onset_seconds".into()))?;
    let label_idx = headers
        .iter()
        .position(|h| h.trim() == "label")
        .ok_or_else(|| IngestError::MissingColumn("label".into()))?;
    let mut entries = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        let onset: f64 = record
            .get(onset_idx)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| IngestError::InvalidValue {
                what: "onset",
                row: row_no + 2,
                value: record.get(onset_idx).unwrap_or("").to_string(),
            })?;
        let label: ColorClass = record
            .get(label_idx)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| IngestError::InvalidValue {
                what: "label",
                row: row_no + 2,
                value: record.get(label_idx).unwrap_or("").to_string(),
            })?;
        entries.push((onset, label));
    }
    Ok(StimulusSchedule { entries })
}

pub fn serialize_schedule(schedule: &StimulusSchedule) -> String {
    let mut out = String::from("onset_seconds,label\n");
    for &(onset, label) in &schedule.entries {
        let _ = writeln!(out, "{onset},{label}");
    }
    out
}

// ---------------------------------------------------------------------------
// Marker detection and epoching
// ---------------------------------------------------------------------------

/// Returns the timestamp of the first jaw clench marker.
pub fn detect_start_marker(rec: &RawRecording) -> Result<f64, IngestError> {
    rec.markers
        .iter()
        .find(|(_, kind)| *kind == MarkerKind::JawClench)
        .map(|&(ts, _)| ts)
        .ok_or(IngestError::NoStartMarker)
}

/// Slices the recording into one 512-sample labeled epoch per schedule entry,
/// starting at `start + onset`. Baseline (black) intervals are discarded.
pub fn epoch_trials(
    rec: &RawRecording,
    schedule: &StimulusSchedule,
    start: f64,
    subject_id: u32,
    trial_id: u32,
) -> Result<Vec<EpochedTrial>, IngestError> {
    // First sample at or after the start marker; timestamps are only used for
    // this alignment, sample spacing is assumed uniform afterwards.
    let start_idx = rec.timestamps.partition_point(|&t| t < start);
    let n = rec.len();
    let epoch_len = EPOCH_SAMPLES;
    let mut fit = 0usize;
    for &(onset, _) in &schedule.entries {
        let begin = start_idx + (onset * rec.sample_rate).round() as usize;
        if begin + epoch_len <= n {
            fit += 1;
        }
    }
    if fit < schedule.len() {
        return Err(IngestError::RecordingTooShort {
            fit,
            requested: schedule.len(),
        });
    }
    let epochs = schedule
        .entries
        .iter()
        .enumerate()
        .map(|(i, &(onset, label))| {
            let begin = start_idx + (onset * rec.sample_rate).round() as usize;
            let channel_segments = std::array::from_fn(|c| {
                rec.channels[c][begin..begin + epoch_len].to_vec()
            });
            EpochedTrial {
                label,
                channel_segments,
                subject_id,
                trial_id,
                epoch_index: i as u32,
            }
        })
        .collect();
    Ok(epochs)
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

/// Per-color (alpha_gain, beta_gain) sinusoid amplitudes in microvolts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassBandGains {
    pub gains: [(f64, f64); 3],
}

impl ClassBandGains {
    pub fn get(&self, color: ColorClass) -> (f64, f64) {
        self.gains[color.index()]
    }

    /// Gains that make the three classes separable through the band-power
    /// pipeline: red alpha-dominant, green beta-dominant, blue balanced.
    pub fn separable() -> Self {
        ClassBandGains {
            gains: [(3.0, 0.6), (0.6, 3.0), (1.8, 1.8)],
        }
    }

    pub fn zero() -> Self {
        ClassBandGains {
            gains: [(0.0, 0.0); 3],
        }
    }
}

/// Baseline offset of raw samples, mimicking the headband's ADC midpoint.
const SYNTH_DC_OFFSET: f64 = 800.0;
/// Silence before the start marker and after the last stimulus, in seconds.
const SYNTH_LEAD_SECONDS: f64 = 2.0;
/// Per-channel carrier frequencies inside the alpha and beta bands.
const ALPHA_CARRIERS: [f64; 4] = [9.5, 10.0, 10.5, 11.0];
const BETA_CARRIERS: [f64; 4] = [18.0, 20.0, 22.0, 24.0];

/// Generates a deterministic synthetic recording for the given schedule: each
/// stimulus interval superposes per-channel alpha- and beta-band sinusoids
/// scaled by the label's gains, on top of white noise and a DC offset, with a
/// jaw clench marker at the schedule origin. The schedule is returned
/// unchanged alongside the recording.
pub fn generate_synthetic_recording(
    seed: u64,
    schedule: StimulusSchedule,
    gains: &ClassBandGains,
    noise_sigma: f64,
) -> (RawRecording, StimulusSchedule) {
    assert!(noise_sigma >= 0.0, "noise_sigma must be nonnegative");
    for &(a, b) in &gains.gains {
        assert!(a >= 0.0 && b >= 0.0, "gains must be nonnegative");
    }
    let last_end = schedule
        .entries
        .iter()
        .map(|&(onset, _)| onset + 2.0)
        .fold(0.0, f64::max);
    let total = SYNTH_LEAD_SECONDS + last_end + SYNTH_LEAD_SECONDS;
    let n = (total * SAMPLE_RATE).round() as usize;
    let timestamps: Vec<f64> = (0..n).map(|i| i as f64 / SAMPLE_RATE).collect();

    // Independent noise stream per channel, so draw order cannot couple
    // channels together.
    let mut channels: [Vec<f64>; 4] = std::array::from_fn(|c| {
        let mut rng = Rng::seed_from_u64(derive_seed(seed, &[0, c as u64]));
        (0..n)
            .map(|_| SYNTH_DC_OFFSET + noise_sigma * rng.normal())
            .collect()
    });

    for (e, &(onset, label)) in schedule.entries.iter().enumerate() {
        let (alpha_gain, beta_gain) = gains.get(label);
        let begin = ((SYNTH_LEAD_SECONDS + onset) * SAMPLE_RATE).round() as usize;
        let end = (begin + EPOCH_SAMPLES).min(n);
        for (c, series) in channels.iter_mut().enumerate() {
            let mut phase_rng =
                Rng::seed_from_u64(derive_seed(seed, &[1, e as u64, c as u64]));
            let phase_a = phase_rng.uniform(0.0, 2.0 * std::f64::consts::PI);
            let phase_b = phase_rng.uniform(0.0, 2.0 * std::f64::consts::PI);
            let omega_a = 2.0 * std::f64::consts::PI * ALPHA_CARRIERS[c];
            let omega_b = 2.0 * std::f64::consts::PI * BETA_CARRIERS[c];
            for (k, value) in series[begin..end].iter_mut().enumerate() {
                let t = k as f64 / SAMPLE_RATE;
                *value += alpha_gain * (omega_a * t + phase_a).sin()
                    + beta_gain * (omega_b * t + phase_b).sin();
            }
        }
    }

    let rec = RawRecording {
        sample_rate: SAMPLE_RATE,
        channels,
        timestamps,
        markers: vec![(SYNTH_LEAD_SECONDS, MarkerKind::JawClench)],
    };
    (rec, schedule)
}

// ---------------------------------------------------------------------------
// Epochs CSV
// ---------------------------------------------------------------------------

/// Renders epochs as CSV rows `subject,trial,epoch,label,channel,sample_index,value`.
pub fn epochs_csv(epochs: &[EpochedTrial]) -> String {
    let mut out = String::from("subject,trial,epoch,label,channel,sample_index,value\n");
    for ep in epochs {
        for ch in Channel::ALL {
            for (i, v) in ep.channel_segments[ch.index()].iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    ep.subject_id, ep.trial_id, ep.epoch_index, ep.label, ch, i, v
                );
            }
        }
    }
    out
}

/// Parses the epochs CSV format back into `EpochedTrial`s (ordered by
/// subject, trial, epoch as encountered).
pub fn parse_epochs_csv(text: &str) -> Result<Vec<EpochedTrial>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let idx = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IngestError::MissingColumn(name.into()))
    };
    let (s_i, t_i, e_i, l_i, c_i, x_i, v_i) = (
        idx("subject")?,
        idx("trial")?,
        idx("epoch")?,
        idx("label")?,
        idx("channel")?,
        idx("sample_index")?,
        idx("value")?,
    );
    let mut epochs: Vec<EpochedTrial> = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        let bad = |what: &'static str| IngestError::InvalidValue {
            what,
            row: row_no + 2,
            value: format!("{record:?}"),
        };
        let subject: u32 = record.get(s_i).and_then(|s| s.parse().ok()).ok_or(bad("subject"))?;
        let trial: u32 = record.get(t_i).and_then(|s| s.parse().ok()).ok_or(bad("trial"))?;
        let epoch: u32 = record.get(e_i).and_then(|s| s.parse().ok()).ok_or(bad("epoch"))?;
        let label: ColorClass = record.get(l_i).and_then(|s| s.parse().ok()).ok_or(bad("label"))?;
        let channel: Channel = record.get(c_i).and_then(|s| s.parse().ok()).ok_or(bad("channel"))?;
        let sample: usize = record.get(x_i).and_then(|s| s.parse().ok()).ok_or(bad("sample_index"))?;
        let value: f64 = record.get(v_i).and_then(|s| s.parse().ok()).ok_or(bad("value"))?;
        let key_matches = |ep: &EpochedTrial| {
            ep.subject_id == subject && ep.trial_id == trial && ep.epoch_index == epoch
        };
        if epochs.last().map(|ep| !key_matches(ep)).unwrap_or(true) {
            epochs.push(EpochedTrial {
                label,
                channel_segments: Default::default(),
                subject_id: subject,
                trial_id: trial,
                epoch_index: epoch,
            });
        }
        let ep = epochs.last_mut().unwrap();
        let series = &mut ep.channel_segments[channel.index()];
        if series.len() != sample {
            return Err(bad("sample_index"));
        }
        series.push(value);
    }
    Ok(epochs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_csv() -> String {
        "TimeStamp,RAW_TP9,RAW_AF7,RAW_AF8,RAW_TP10,Marker\n\
         0.0,1.0,2.0,3.0,4.0,\n\
         0.00390625,1.5,2.5,3.5,4.5,jaw_clench\n\
         0.0078125,1.25,2.25,3.25,4.25,\n"
            .to_string()
    }

    #[test]
    fn parses_three_row_csv() {
        let rec = parse_recording(&tiny_csv()).unwrap();
        assert_eq!(rec.len(), 3);
        assert_eq!(rec.sample_rate, 256.0);
        assert_eq!(rec.channels[0], vec![1.0, 1.5, 1.25]);
        assert_eq!(rec.markers, vec![(0.00390625, MarkerKind::JawClench)]);
    }

    #[test]
    fn missing_channel_column_is_an_error() {
        let text = "TimeStamp,RAW_AF7,RAW_AF8,RAW_TP10,Marker\n0.0,2.0,3.0,4.0,\n";
        match parse_recording(text) {
            Err(IngestError::MissingColumn(c)) => assert_eq!(c, "RAW_TP9"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn non_monotone_timestamps_rejected() {
        let text = "TimeStamp,RAW_TP9,RAW_AF7,RAW_AF8,RAW_TP10,Marker\n\
                    0.1,1,1,1,1,\n0.1,1,1,1,1,\n";
        assert!(matches!(
            parse_recording(text),
            Err(IngestError::NonMonotoneTimestamps { row: 3 })
        ));
    }

    #[test]
    fn empty_recording_rejected() {
        let text = "TimeStamp,RAW_TP9,RAW_AF7,RAW_AF8,RAW_TP10,Marker\n";
        assert!(matches!(parse_recording(text), Err(IngestError::EmptyRecording)));
    }

    #[test]
    fn marker_only_rows_keep_marker_and_skip_sample() {
        let text = "TimeStamp,RAW_TP9,RAW_AF7,RAW_AF8,RAW_TP10,Marker\n\
                    0.0,1,1,1,1,\n0.001,,,,,eye_blink\n0.004,2,2,2,2,\n";
        let rec = parse_recording(text).unwrap();
        assert_eq!(rec.len(), 2);
        assert_eq!(rec.markers, vec![(0.001, MarkerKind::EyeBlink)]);
    }

    #[test]
    fn crlf_accepted() {
        let text = tiny_csv().replace('\n', "\r\n");
        assert_eq!(parse_recording(&text).unwrap().len(), 3);
    }

    #[test]
    fn serialize_parse_is_fixed_point() {
        let rec = parse_recording(&tiny_csv()).unwrap();
        let text = serialize_recording(&rec);
        let rec2 = parse_recording(&text).unwrap();
        assert_eq!(rec, rec2);
        assert_eq!(text, serialize_recording(&rec2));
    }

    #[test]
    fn detects_first_jaw_clench() {
        let mut rec = parse_recording(&tiny_csv()).unwrap();
        rec.markers = vec![
            (1.0, MarkerKind::EyeBlink),
            (2.0, MarkerKind::JawClench),
            (5.0, MarkerKind::JawClench),
        ];
        assert_eq!(detect_start_marker(&rec).unwrap(), 2.0);
        rec.markers = vec![(1.5, MarkerKind::JawClench)];
        assert_eq!(detect_start_marker(&rec).unwrap(), 1.5);
        rec.markers.clear();
        assert!(matches!(detect_start_marker(&rec), Err(IngestError::NoStartMarker)));
    }

    #[test]
    fn protocol_arithmetic() {
        let p = StimulusProtocol::standard();
        p.validate().unwrap();
        assert_eq!(p.epochs_per_trial(), 60);
        let bad = StimulusProtocol {
            trial_duration: 100.0,
            ..StimulusProtocol::standard()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn full_schedule_yields_sixty_epochs() {
        let protocol = StimulusProtocol::standard();
        let schedule = StimulusSchedule::randomized(&protocol, 7).unwrap();
        assert_eq!(schedule.len(), 60);
        let (rec, schedule) =
            generate_synthetic_recording(7, schedule, &ClassBandGains::zero(), 0.5);
        let start = detect_start_marker(&rec).unwrap();
        let epochs = epoch_trials(&rec, &schedule, start, 1, 1).unwrap();
        assert_eq!(epochs.len(), 60);
        for color in ColorClass::ALL {
            assert_eq!(epochs.iter().filter(|e| e.label == color).count(), 20);
        }
        assert!(epochs
            .iter()
            .all(|e| e.channel_segments.iter().all(|s| s.len() == 512)));
        // Labels preserve schedule order.
        for (ep, &(_, label)) in epochs.iter().zip(&schedule.entries) {
            assert_eq!(ep.label, label);
        }
    }

    #[test]
    fn single_entry_schedule_takes_first_samples() {
        let schedule = StimulusSchedule {
            entries: vec![(0.0, ColorClass::Green)],
        };
        let (rec, schedule) =
            generate_synthetic_recording(3, schedule, &ClassBandGains::zero(), 0.0);
        let start = detect_start_marker(&rec).unwrap();
        let epochs = epoch_trials(&rec, &schedule, start, 1, 1).unwrap();
        assert_eq!(epochs.len(), 1);
        let start_idx = rec.timestamps.partition_point(|&t| t < start);
        assert_eq!(
            epochs[0].channel_segments[0],
            rec.channels[0][start_idx..start_idx + 512].to_vec()
        );
    }

    #[test]
    fn truncated_recording_reports_fit() {
        let protocol = StimulusProtocol::standard();
        let schedule = StimulusSchedule::randomized(&protocol, 1).unwrap();
        let (mut rec, schedule) =
            generate_synthetic_recording(1, schedule, &ClassBandGains::zero(), 0.0);
        let keep = (100.0 * SAMPLE_RATE) as usize;
        rec.timestamps.truncate(keep);
        for series in rec.channels.iter_mut() {
            series.truncate(keep);
        }
        let start = detect_start_marker(&rec).unwrap();
        match epoch_trials(&rec, &schedule, start, 1, 1) {
            Err(IngestError::RecordingTooShort { fit, requested }) => {
                assert_eq!(requested, 60);
                // Marker at 2 s; onset o fits iff (2 + o + 2) * 256 <= 25600,
                // i.e. o <= 96: onsets 0, 4, ..., 96.
                assert_eq!(fit, 25);
            }
            other => panic!("expected RecordingTooShort, got {other:?}"),
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let protocol = StimulusProtocol::with_repetitions(2);
        let schedule = StimulusSchedule::randomized(&protocol, 5).unwrap();
        let (a, _) = generate_synthetic_recording(
            9,
            schedule.clone(),
            &ClassBandGains::separable(),
            1.0,
        );
        let (b, _) =
            generate_synthetic_recording(9, schedule, &ClassBandGains::separable(), 1.0);
        assert_eq!(a, b);
    }

    #[test]
    fn schedule_round_trip() {
        let protocol = StimulusProtocol::with_repetitions(3);
        let schedule = StimulusSchedule::randomized(&protocol, 11).unwrap();
        let text = serialize_schedule(&schedule);
        assert_eq!(parse_schedule(&text).unwrap(), schedule);
    }

    #[test]
    fn randomized_schedule_spacing_and_multiplicity() {
        let protocol = StimulusProtocol::standard();
        let schedule = StimulusSchedule::randomized(&protocol, 13).unwrap();
        for (i, &(onset, _)) in schedule.entries.iter().enumerate() {
            assert_eq!(onset, i as f64 * 4.0);
        }
        for color in ColorClass::ALL {
            let count = schedule.entries.iter().filter(|(_, l)| *l == color).count();
            assert_eq!(count, 20);
        }
    }

    #[test]
    fn epochs_csv_round_trip() {
        let schedule = StimulusSchedule {
            entries: vec![(0.0, ColorClass::Red), (4.0, ColorClass::Blue)],
        };
        let (rec, schedule) =
            generate_synthetic_recording(2, schedule, &ClassBandGains::separable(), 0.3);
        let start = detect_start_marker(&rec).unwrap();
        let epochs = epoch_trials(&rec, &schedule, start, 4, 2).unwrap();
        let text = epochs_csv(&epochs);
        let back = parse_epochs_csv(&text).unwrap();
        assert_eq!(back, epochs);
    }
}
