//! Per-bin log-likelihoods of one batch outcome over the frequency grid.
//!
//! Two update rules are provided: the binomial likelihood of the raw click
//! count, and the binary (majority-voting) likelihood of the thresholded
//! batch. Everything is kept in log space; binomial coefficients are
//! dropped because they do not depend on the frequency.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::sensor::{MeasurementSetting, SensorModel, PROB_EPSILON};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchOutcome {
    clicks: u64,
    setting: MeasurementSetting,
}

impl BatchOutcome {
    pub fn new(clicks: u64, setting: MeasurementSetting) -> Result<Self> {
        if clicks > setting.repetitions() {
            return Err(Error::InvalidOutcome {
                clicks,
                repetitions: setting.repetitions(),
            });
        }
        Ok(Self { clicks, setting })
    }

    pub fn clicks(&self) -> u64 {
        self.clicks
    }

    pub fn setting(&self) -> &MeasurementSetting {
        &self.setting
    }

    pub fn repetitions(&self) -> u64 {
        self.setting.repetitions()
    }

    /// Fraction of shots that clicked.
    pub fn click_fraction(&self) -> f64 {
        self.clicks as f64 / self.repetitions() as f64
    }
}

/// Binary spin assignment of a thresholded batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpinState {
    /// Bright state, `u = 0`.
    Zero,
    /// Dark state, `u = 1`.
    One,
}

impl SpinState {
    pub fn as_u8(self) -> u8 {
        match self {
            SpinState::Zero => 0,
            SpinState::One => 1,
        }
    }

    fn sign(self) -> f64 {
        match self {
            SpinState::Zero => 1.0,
            SpinState::One => -1.0,
        }
    }
}

/// `r ln p + (R - r) ln(1 - p)` for each entry of `probs`.
pub fn binomial_log_weights_into(clicks: u64, repetitions: u64, probs: &[f64], out: &mut [f64]) {
    debug_assert_eq!(probs.len(), out.len());
    let r = clicks as f64;
    let misses = (repetitions - clicks) as f64;
    for (o, &p) in out.iter_mut().zip(probs) {
        *o = r * p.ln() + misses * (-p).ln_1p();
    }
}

/// Binomial log-likelihood of `outcome` at every bin centre, written into `out`.
pub fn log_likelihood_binomial_into(
    model: &SensorModel,
    outcome: &BatchOutcome,
    grid: &FrequencyGrid,
    out: &mut [f64],
) {
    assert_eq!(out.len(), grid.n_bins());
    let setting = outcome.setting();
    let alpha = model.threshold_alpha();
    let amplitude = model.effective_visibility(setting.tau());
    let omega = TAU * setting.tau();
    let phi = setting.phi();
    let r = outcome.clicks() as f64;
    let misses = (outcome.repetitions() - outcome.clicks()) as f64;
    let (f0, df) = (grid.f_min(), grid.bin_width());
    for (i, o) in out.iter_mut().enumerate() {
        let f = f0 + (i as f64 + 0.5) * df;
        let p = (alpha * (1.0 - amplitude * (omega * f - phi).cos()))
            .clamp(PROB_EPSILON, 1.0 - PROB_EPSILON);
        *o = r * p.ln() + misses * (-p).ln_1p();
    }
}

pub fn log_likelihood_binomial(
    model: &SensorModel,
    outcome: &BatchOutcome,
    grid: &FrequencyGrid,
) -> Vec<f64> {
    let mut out = vec![0.0; grid.n_bins()];
    log_likelihood_binomial_into(model, outcome, grid, &mut out);
    out
}

/// Click-count threshold separating the two states: the midpoint of the
/// expected counts, `R * alpha`.
pub fn majority_threshold(model: &SensorModel, repetitions: u64) -> f64 {
    repetitions as f64 * model.threshold_alpha()
}

/// Counts at or above the threshold are bright (`u = 0`).
pub fn classify_majority(outcome: &BatchOutcome, threshold: f64) -> SpinState {
    if outcome.clicks() as f64 >= threshold {
        SpinState::Zero
    } else {
        SpinState::One
    }
}

/// `ln(1/2 [1 + (-1)^u exp(-(tau/T2*)^2) cos(2 pi f tau - phi)])` per bin,
/// with the argument floored at `1e-12`.
pub fn log_likelihood_majority_into(
    model: &SensorModel,
    u: SpinState,
    setting: &MeasurementSetting,
    grid: &FrequencyGrid,
    out: &mut [f64],
) {
    assert_eq!(out.len(), grid.n_bins());
    let amplitude = u.sign() * model.decay(setting.tau());
    let omega = TAU * setting.tau();
    let phi = setting.phi();
    let (f0, df) = (grid.f_min(), grid.bin_width());
    for (i, o) in out.iter_mut().enumerate() {
        let f = f0 + (i as f64 + 0.5) * df;
        let p = 0.5 * (1.0 + amplitude * (omega * f - phi).cos());
        *o = p.max(PROB_EPSILON).ln();
    }
}

pub fn log_likelihood_majority(
    model: &SensorModel,
    u: SpinState,
    setting: &MeasurementSetting,
    grid: &FrequencyGrid,
) -> Vec<f64> {
    let mut out = vec![0.0; grid.n_bins()];
    log_likelihood_majority_into(model, u, setting, grid, &mut out);
    out
}
