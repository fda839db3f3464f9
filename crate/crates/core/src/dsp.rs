//! Time-frequency machinery: radix-2 FFT, complex Morlet wavelets, FFT-based
//! continuous wavelet transform, and band-power extraction.
//!
//! The FFT is implemented here rather than taken from a platform library so
//! that the same binary produces bit-identical spectrograms on every run.
//! Forward transform is unnormalized; the inverse carries the 1/N factor.

use num_complex::Complex;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::ingest::Channel;

/// A finite complex sample sequence.
pub type ComplexSeries = Vec<Complex<f64>>;

#[derive(Debug, thiserror::Error)]
pub enum DspError {
    #[error("FFT length {0} is not a power of two")]
    NonPowerOfTwoLength(usize),
    #[error("wavelet support half-width {half_width}s does not cover 4 sigma_t ({sigma_t}s)")]
    InsufficientSupport { half_width: f64, sigma_t: f64 },
    #[error("invalid wavelet parameter: {0}")]
    InvalidParam(&'static str),
    #[error("segment of {len} samples is shorter than the longest wavelet ({required} samples)")]
    SegmentTooShort { len: usize, required: usize },
    #[error("requested FFT length {len} is below the convolution length {required}")]
    FftLengthTooShort { len: usize, required: usize },
    #[error("frequency grid does not cover the {0} band")]
    BandNotCovered(&'static str),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Parameters of one complex Morlet wavelet. `sigma_t` is the Gaussian
/// envelope duration; the normalization `A = (sigma_t * sqrt(pi))^(-1/2)`
/// makes the wavelet unit-energy. Signal and wavelet must share `sample_rate`.
#[derive(Clone, Debug)]
pub struct MorletParams {
    pub center_hz: f64,
    pub sigma_t: f64,
    pub sample_rate: f64,
    pub support_half_width: f64,
}

impl MorletParams {
    /// Builds parameters from a cycle count: `sigma_t = n_cycles / (2 pi f)`,
    /// with the sampling grid extending 5 sigma_t on each side.
    pub fn from_cycles(center_hz: f64, n_cycles: f64, sample_rate: f64) -> Self {
        let sigma_t = n_cycles / (2.0 * std::f64::consts::PI * center_hz);
        MorletParams {
            center_hz,
            sigma_t,
            sample_rate,
            support_half_width: 5.0 * sigma_t,
        }
    }

    /// Normalization constant `A = (sigma_t * sqrt(pi))^(-1/2)`.
    pub fn amplitude(&self) -> f64 {
        1.0 / (self.sigma_t * std::f64::consts::PI.sqrt()).sqrt()
    }

    /// Number of samples on each side of t = 0.
    pub fn half_len(&self) -> usize {
        (self.support_half_width * self.sample_rate).floor() as usize
    }
}

/// Power-time matrix over a frequency grid for one channel. `power[r][t]` is
/// squared magnitude at `freqs[r]`, `times[t]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSpectrogram {
    pub freqs: Vec<f64>,
    pub times: Vec<usize>,
    pub power: Vec<Vec<f64>>,
    pub channel: Channel,
}

/// Per-time mean power over the alpha (8-12 Hz) and beta (13-30 Hz) rows of a
/// spectrogram.
#[derive(Clone, Debug, PartialEq)]
pub struct BandPower {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub channel: Channel,
}

/// The default analysis grid: 8..=30 Hz in 1 Hz steps (23 rows).
pub fn default_freq_grid() -> Vec<f64> {
    (8..=30).map(|f| f as f64).collect()
}

fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

/// Smallest power of two >= n.
pub fn next_pow2(n: usize) -> usize {
    let mut p = 1;
    while p < n {
        p <<= 1;
    }
    p
}

fn fft_in_place(a: &mut [Complex<f64>], inverse: bool) {
    let n = a.len();
    if n <= 1 {
        return;
    }
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }
    // Twiddle table for the largest stage; inner stages stride through it,
    // which avoids accumulating rounding error from repeated multiplication.
    let sign = if inverse { 1.0 } else { -1.0 };
    let half = n / 2;
    let step = sign * 2.0 * std::f64::consts::PI / n as f64;
    let twiddles: Vec<Complex<f64>> = (0..half)
        .map(|k| Complex::from_polar(1.0, step * k as f64))
        .collect();
    let mut len = 2;
    while len <= n {
        let stride = n / len;
        for chunk in a.chunks_mut(len) {
            for i in 0..len / 2 {
                let w = twiddles[i * stride];
                let u = chunk[i];
                let v = chunk[i + len / 2] * w;
                chunk[i] = u + v;
                chunk[i + len / 2] = u - v;
            }
        }
        len <<= 1;
    }
    if inverse {
        let scale = 1.0 / n as f64;
        for x in a.iter_mut() {
            *x *= scale;
        }
    }
}

/// Forward DFT (unnormalized). Input length must be a power of two.
pub fn fft(x: &[Complex<f64>]) -> Result<ComplexSeries, DspError> {
    if !is_power_of_two(x.len()) {
        return Err(DspError::NonPowerOfTwoLength(x.len()));
    }
    let mut a = x.to_vec();
    fft_in_place(&mut a, false);
    Ok(a)
}

/// Inverse DFT scaled by 1/N, so `ifft(fft(x)) == x` up to rounding.
pub fn ifft(x: &[Complex<f64>]) -> Result<ComplexSeries, DspError> {
    if !is_power_of_two(x.len()) {
        return Err(DspError::NonPowerOfTwoLength(x.len()));
    }
    let mut a = x.to_vec();
    fft_in_place(&mut a, true);
    Ok(a)
}

/// Samples the complex Morlet wavelet
/// `w(t) = A exp(-t^2 / 2 sigma_t^2) exp(i 2 pi f t)`
/// on a symmetric grid at the configured sample rate. Length is always odd.
pub fn morlet_wavelet(p: &MorletParams) -> Result<ComplexSeries, DspError> {
    if p.center_hz <= 0.0 {
        return Err(DspError::InvalidParam("center frequency must be positive"));
    }
    if p.sigma_t <= 0.0 {
        return Err(DspError::InvalidParam("sigma_t must be positive"));
    }
    if p.sample_rate <= 0.0 {
        return Err(DspError::InvalidParam("sample rate must be positive"));
    }
    if p.support_half_width < 4.0 * p.sigma_t {
        return Err(DspError::InsufficientSupport {
            half_width: p.support_half_width,
            sigma_t: p.sigma_t,
        });
    }
    let half = p.half_len() as isize;
    let amp = p.amplitude();
    let two_sigma_sq = 2.0 * p.sigma_t * p.sigma_t;
    let omega = 2.0 * std::f64::consts::PI * p.center_hz;
    let wavelet = (-half..=half)
        .map(|k| {
            let t = k as f64 / p.sample_rate;
            let envelope = amp * (-t * t / two_sigma_sq).exp();
            Complex::from_polar(envelope, omega * t)
        })
        .collect();
    Ok(wavelet)
}

/// "Same"-mode convolution of a real signal with a complex kernel via FFT.
/// Both are zero-padded to `fft_len` (default: next power of two covering the
/// full convolution); output is the central `signal.len()` samples.
pub fn fft_convolve_same(
    signal: &[f64],
    kernel: &[Complex<f64>],
    fft_len: Option<usize>,
) -> Result<ComplexSeries, DspError> {
    let n_sig = signal.len();
    let n_ker = kernel.len();
    let full = n_sig + n_ker - 1;
    let len = fft_len.unwrap_or_else(|| next_pow2(full));
    if !is_power_of_two(len) {
        return Err(DspError::NonPowerOfTwoLength(len));
    }
    if len < full {
        return Err(DspError::FftLengthTooShort { len, required: full });
    }
    let mut a: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    a.resize(len, Complex::new(0.0, 0.0));
    let mut b = kernel.to_vec();
    b.resize(len, Complex::new(0.0, 0.0));
    fft_in_place(&mut a, false);
    fft_in_place(&mut b, false);
    for (x, y) in a.iter_mut().zip(b.iter()) {
        *x *= y;
    }
    fft_in_place(&mut a, true);
    let offset = (n_ker - 1) / 2;
    Ok(a[offset..offset + n_sig].to_vec())
}

/// Convolves the segment with a Morlet wavelet per grid frequency and squares
/// the magnitude, yielding a `freqs x time` power matrix. The signal spectrum
/// is computed once at a shared padding length (the result is invariant to
/// padding beyond the minimum power of two).
pub fn cwt_power(
    segment: &[f64],
    freqs: &[f64],
    sample_rate: f64,
    n_cycles: f64,
    channel: Channel,
) -> Result<PowerSpectrogram, DspError> {
    let n_sig = segment.len();
    let wavelets: Vec<ComplexSeries> = freqs
        .iter()
        .map(|&f| morlet_wavelet(&MorletParams::from_cycles(f, n_cycles, sample_rate)))
        .collect::<Result<_, _>>()?;
    let longest = wavelets.iter().map(|w| w.len()).max().unwrap_or(0);
    if n_sig < longest {
        return Err(DspError::SegmentTooShort {
            len: n_sig,
            required: longest,
        });
    }
    let fft_len = next_pow2(n_sig + longest - 1);
    let mut sig: Vec<Complex<f64>> = segment.iter().map(|&x| Complex::new(x, 0.0)).collect();
    sig.resize(fft_len, Complex::new(0.0, 0.0));
    fft_in_place(&mut sig, false);

    let mut power = Vec::with_capacity(freqs.len());
    for wavelet in &wavelets {
        let mut spec = wavelet.clone();
        spec.resize(fft_len, Complex::new(0.0, 0.0));
        fft_in_place(&mut spec, false);
        for (s, x) in spec.iter_mut().zip(sig.iter()) {
            *s *= x;
        }
        fft_in_place(&mut spec, true);
        let offset = (wavelet.len() - 1) / 2;
        let row: Vec<f64> = spec[offset..offset + n_sig]
            .iter()
            .map(|z| z.norm_sqr())
            .collect();
        power.push(row);
    }
    Ok(PowerSpectrogram {
        freqs: freqs.to_vec(),
        times: (0..n_sig).collect(),
        power,
        channel,
    })
}

const BAND_TOL: f64 = 1e-9;

fn rows_in_band(freqs: &[f64], lo: f64, hi: f64) -> Vec<usize> {
    freqs
        .iter()
        .enumerate()
        .filter(|(_, &f)| f >= lo - BAND_TOL && f <= hi + BAND_TOL)
        .map(|(i, _)| i)
        .collect()
}

fn band_covered(freqs: &[f64], lo: u32, hi: u32) -> bool {
    (lo..=hi).all(|f| freqs.iter().any(|&g| (g - f as f64).abs() < BAND_TOL))
}

/// Averages spectrogram rows into per-time alpha (8-12 Hz) and beta
/// (13-30 Hz) series. The grid must contain every integer frequency of both
/// bands.
pub fn band_power(spec: &PowerSpectrogram) -> Result<BandPower, DspError> {
    if !band_covered(&spec.freqs, 8, 12) {
        return Err(DspError::BandNotCovered("alpha (8-12 Hz)"));
    }
    if !band_covered(&spec.freqs, 13, 30) {
        return Err(DspError::BandNotCovered("beta (13-30 Hz)"));
    }
    let n_t = spec.times.len();
    let mean_rows = |rows: &[usize]| -> Vec<f64> {
        let mut out = vec![0.0; n_t];
        for &r in rows {
            for (o, &p) in out.iter_mut().zip(spec.power[r].iter()) {
                *o += p;
            }
        }
        let inv = 1.0 / rows.len() as f64;
        out.iter_mut().for_each(|o| *o *= inv);
        out
    };
    Ok(BandPower {
        alpha: mean_rows(&rows_in_band(&spec.freqs, 8.0, 12.0)),
        beta: mean_rows(&rows_in_band(&spec.freqs, 13.0, 30.0)),
        channel: spec.channel,
    })
}

/// Renders the spectrogram as CSV text: header row of time indices, then one
/// row per frequency with the Hz value in the first column.
pub fn spectrogram_csv(spec: &PowerSpectrogram) -> String {
    let mut out = String::new();
    out.push_str("hz");
    for t in &spec.times {
        let _ = write!(out, ",{t}");
    }
    out.push('\n');
    for (f, row) in spec.freqs.iter().zip(spec.power.iter()) {
        let _ = write!(out, "{f}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Writes `spectrogram_csv` to a file.
pub fn emit_spectrogram(spec: &PowerSpectrogram, path: &Path) -> Result<(), DspError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(spectrogram_csv(spec).as_bytes())?;
    Ok(())
}

/// Parses CSV text produced by `spectrogram_csv`.
pub fn parse_spectrogram_csv(text: &str, channel: Channel) -> Result<PowerSpectrogram, DspError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or(DspError::InvalidParam("empty spectrogram file"))?;
    let times: Vec<usize> = header
        .split(',')
        .skip(1)
        .map(|t| t.parse().map_err(|_| DspError::InvalidParam("bad time index")))
        .collect::<Result<_, _>>()?;
    let mut freqs = Vec::new();
    let mut power = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let f: f64 = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or(DspError::InvalidParam("bad frequency value"))?;
        let row: Vec<f64> = fields
            .map(|s| s.parse().map_err(|_| DspError::InvalidParam("bad power value")))
            .collect::<Result<_, _>>()?;
        freqs.push(f);
        power.push(row);
    }
    Ok(PowerSpectrogram {
        freqs,
        times,
        power,
        channel,
    })
}
