//! Shared fixtures for the benchmark targets.

use eegcolor::ingest::{
    detect_start_marker, epoch_trials, generate_synthetic_recording, ClassBandGains,
    EpochedTrial, StimulusProtocol, StimulusSchedule,
};
use eegcolor::rng::Rng;

/// One subject's worth of labeled synthetic epochs.
pub fn synthetic_epochs(reps: usize, seed: u64) -> Vec<EpochedTrial> {
    let protocol = StimulusProtocol::with_repetitions(reps);
    let schedule = StimulusSchedule::randomized(&protocol, seed).expect("valid protocol");
    let (rec, schedule) =
        generate_synthetic_recording(seed, schedule, &ClassBandGains::separable(), 1.0);
    let start = detect_start_marker(&rec).expect("marker present");
    epoch_trials(&rec, &schedule, start, 1, 1).expect("recording covers schedule")
}

/// Gaussian noise vector.
pub fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.normal()).collect()
}
