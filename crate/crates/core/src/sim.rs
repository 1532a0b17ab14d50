//! Simulated sensor: binomial click counts at a hidden detuning, and the
//! bookkeeping of sensing and wall-clock time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::likelihood::BatchOutcome;
use crate::sensor::{MeasurementSetting, SensorModel};

/// Default per-shot initialization/readout overhead (s). Chosen so that 35
/// iterations of 2500 shots on the reference schedule take about 1.09 s.
pub const DEFAULT_SHOT_OVERHEAD: f64 = 12e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub f_true: f64,
    pub rng_seed: u64,
}

/// Seed of run `run_index` under `master_seed` (splitmix64 finalizer over
/// the pair). A run replays bit-exactly from this value alone.
pub fn derive_seed(master_seed: u64, run_index: u64) -> u64 {
    let mut z = master_seed
        .wrapping_add(run_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent RNG for run `run_index` under `master_seed`.
pub fn run_rng(master_seed: u64, run_index: u64) -> ChaCha8Rng {
    rng_from_seed(derive_seed(master_seed, run_index))
}

/// Draws the click count of one batch at the true detuning.
pub fn sample_counts<R: Rng + ?Sized>(
    model: &SensorModel,
    setting: &MeasurementSetting,
    f_true: f64,
    rng: &mut R,
) -> BatchOutcome {
    let p = model.p_detect(setting, f_true);
    let clicks = sample_binomial(setting.repetitions(), p, rng);
    BatchOutcome::new(clicks, *setting).expect("binomial draw never exceeds the trial count")
}

pub fn sample_binomial<R: Rng + ?Sized>(trials: u64, p: f64, rng: &mut R) -> u64 {
    Binomial::new(trials, p)
        .expect("probability is clamped into (0, 1)")
        .sample(rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeAccounting {
    pub shot_overhead: f64,
    pub sensing_time: f64,
    pub total_time: f64,
    pub shots: u64,
}

impl TimeAccounting {
    pub fn new(shot_overhead: f64) -> Self {
        Self {
            shot_overhead,
            sensing_time: 0.0,
            total_time: 0.0,
            shots: 0,
        }
    }

    /// Adds one batch: `R tau` of sensing and `R (tau + overhead)` of wall time.
    pub fn advance(&mut self, setting: &MeasurementSetting) {
        let reps = setting.repetitions() as f64;
        self.sensing_time += reps * setting.tau();
        self.total_time += reps * (setting.tau() + self.shot_overhead);
        self.shots += setting.repetitions();
    }
}

impl Default for TimeAccounting {
    fn default() -> Self {
        Self::new(DEFAULT_SHOT_OVERHEAD)
    }
}
