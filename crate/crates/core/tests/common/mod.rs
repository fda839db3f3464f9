//! Independent oracles for the acceptance and integration suites. Everything
//! here is deliberately written from the definitions (quadratic DFT, direct
//! convolution sums, pairwise AUC enumeration, explicit moment formulas) and
//! never calls the implementation paths it checks.

#![allow(dead_code)]

use num_complex::Complex;

use eegcolor::ingest::{
    detect_start_marker, epoch_trials, generate_synthetic_recording, ClassBandGains,
    EpochedTrial, StimulusProtocol, StimulusSchedule,
};
use eegcolor::rng::{derive_seed, Rng};

// ---------------------------------------------------------------------------
// DSP oracles
// ---------------------------------------------------------------------------

/// Quadratic-time DFT straight from the definition.
pub fn naive_dft(x: &[Complex<f64>], inverse: bool) -> Vec<Complex<f64>> {
    let n = x.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut sum = Complex::new(0.0, 0.0);
        for (m, &v) in x.iter().enumerate() {
            let angle = sign * 2.0 * std::f64::consts::PI * (k * m) as f64 / n as f64;
            sum += v * Complex::from_polar(1.0, angle);
        }
        if inverse {
            sum /= n as f64;
        }
        out.push(sum);
    }
    out
}

/// Direct time-domain "same" convolution of a real signal with a complex
/// kernel: full convolution by the definition, then the central slice.
pub fn direct_convolve_same(signal: &[f64], kernel: &[Complex<f64>]) -> Vec<Complex<f64>> {
    let n_sig = signal.len();
    let n_ker = kernel.len();
    let full = n_sig + n_ker - 1;
    let mut out = vec![Complex::new(0.0, 0.0); full];
    for (m, slot) in out.iter_mut().enumerate() {
        for (k, &s) in signal.iter().enumerate() {
            if m >= k && m - k < n_ker {
                *slot += kernel[m - k] * s;
            }
        }
    }
    let offset = (n_ker - 1) / 2;
    out[offset..offset + n_sig].to_vec()
}

// ---------------------------------------------------------------------------
// Statistics oracles
// ---------------------------------------------------------------------------

pub fn oracle_mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn oracle_population_variance(xs: &[f64]) -> f64 {
    let m = oracle_mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
}

pub fn oracle_skewness(xs: &[f64]) -> f64 {
    let m = oracle_mean(xs);
    let var = oracle_population_variance(xs);
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / xs.len() as f64;
    m3 / var.powf(1.5)
}

/// Fisher excess kurtosis.
pub fn oracle_kurtosis(xs: &[f64]) -> f64 {
    let m = oracle_mean(xs);
    let var = oracle_population_variance(xs);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / xs.len() as f64;
    m4 / (var * var) - 3.0
}

pub fn oracle_pearson(a: &[f64], b: &[f64]) -> f64 {
    let ma = oracle_mean(a);
    let mb = oracle_mean(b);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va <= 0.0 || vb <= 0.0 {
        return 0.0;
    }
    cov / (va.sqrt() * vb.sqrt())
}

pub fn oracle_entropy(xs: &[f64], bins: usize) -> f64 {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return 0.0;
    }
    let mut counts = vec![0usize; bins];
    for &x in xs {
        let mut b = ((x - lo) / (hi - lo) * bins as f64) as usize;
        if b >= bins {
            b = bins - 1;
        }
        counts[b] += 1;
    }
    let n = xs.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Hjorth mobility and complexity from explicit difference arrays.
pub fn oracle_hjorth(y: &[f64], sr: f64) -> (f64, f64) {
    let dy: Vec<f64> = (0..y.len() - 1).map(|i| (y[i + 1] - y[i]) * sr).collect();
    let ddy: Vec<f64> = (0..dy.len() - 1).map(|i| (dy[i + 1] - dy[i]) * sr).collect();
    let mobility = (oracle_population_variance(&dy) / oracle_population_variance(y)).sqrt();
    let mobility_dy =
        (oracle_population_variance(&ddy) / oracle_population_variance(&dy)).sqrt();
    (mobility, mobility_dy / mobility)
}

// ---------------------------------------------------------------------------
// Metric oracles
// ---------------------------------------------------------------------------

/// AUC by exhaustive pair enumeration with the 1/2 tie convention.
pub fn oracle_auc_pairwise(scores: &[f64], y: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (si, &yi) in scores.iter().zip(y) {
        if !yi {
            continue;
        }
        for (sj, &yj) in scores.iter().zip(y) {
            if yj {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Multiclass pairwise AUC by direct enumeration of all directed AUCs.
#[allow(clippy::needless_range_loop)]
pub fn oracle_multiclass_auc(scores: &[Vec<f64>], y: &[usize], c: usize) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for pos_class in 0..c {
        for neg_class in 0..c {
            if pos_class == neg_class {
                continue;
            }
            // AUC(j | k): class-j scores, j positive, restricted to {j, k}.
            let idx: Vec<usize> = (0..y.len())
                .filter(|&i| y[i] == pos_class || y[i] == neg_class)
                .collect();
            let s: Vec<f64> = idx.iter().map(|&i| scores[i][pos_class]).collect();
            let pos: Vec<bool> = idx.iter().map(|&i| y[i] == pos_class).collect();
            total += oracle_auc_pairwise(&s, &pos);
            count += 1;
        }
    }
    total / count as f64
}

/// MCC evaluated symbol by symbol from the confusion-matrix formula.
pub fn oracle_mcc(counts: &[Vec<usize>]) -> f64 {
    let k = counts.len();
    let s: f64 = counts.iter().flatten().map(|&v| v as f64).sum();
    let c: f64 = (0..k).map(|i| counts[i][i] as f64).sum();
    let t: Vec<f64> = (0..k)
        .map(|kk| (0..k).map(|i| counts[i][kk] as f64).sum())
        .collect();
    let p: Vec<f64> = (0..k)
        .map(|kk| (0..k).map(|i| counts[kk][i] as f64).sum())
        .collect();
    let sum_pt: f64 = (0..k).map(|i| p[i] * t[i]).sum();
    let sum_p2: f64 = p.iter().map(|v| v * v).sum();
    let sum_t2: f64 = t.iter().map(|v| v * v).sum();
    let denom = ((s * s - sum_p2) * (s * s - sum_t2)).sqrt();
    if denom == 0.0 {
        return 0.0;
    }
    (c * s - sum_pt) / denom
}

// ---------------------------------------------------------------------------
// Synthetic dataset builder
// ---------------------------------------------------------------------------

/// Generates labeled epochs for a multi-subject, multi-trial synthetic
/// study: per (subject, trial) a fresh randomized schedule and recording.
pub fn build_synthetic_epochs(
    subjects: u32,
    trials: u32,
    reps: usize,
    gains: &ClassBandGains,
    noise_sigma: f64,
    seed: u64,
) -> Vec<EpochedTrial> {
    let protocol = StimulusProtocol::with_repetitions(reps);
    let mut epochs = Vec::new();
    for subject in 1..=subjects {
        for trial in 1..=trials {
            let tag = [subject as u64, trial as u64];
            let schedule = StimulusSchedule::randomized(
                &protocol,
                derive_seed(seed, &[tag[0], tag[1], 0]),
            )
            .expect("valid protocol");
            let (rec, schedule) = generate_synthetic_recording(
                derive_seed(seed, &[tag[0], tag[1], 1]),
                schedule,
                gains,
                noise_sigma,
            );
            let start = detect_start_marker(&rec).expect("marker placed by generator");
            epochs.extend(
                epoch_trials(&rec, &schedule, start, subject, trial).expect("recording covers schedule"),
            );
        }
    }
    epochs
}

/// Random window of 8 aligned series for feature-oracle checks.
pub fn random_window(len: usize, rng: &mut Rng) -> eegcolor::features::Window {
    eegcolor::features::Window {
        start: 0,
        series: std::array::from_fn(|_| (0..len).map(|_| rng.normal()).collect()),
    }
}
