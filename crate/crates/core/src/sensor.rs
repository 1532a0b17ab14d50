//! Calibration of a sensor without single-shot readout and its Ramsey
//! detection-probability model.
//!
//! A shot yields a detector click with probability `p_click_m0` when the spin
//! is in the bright state |0⟩ and `p_click_m1` in the dark state |1⟩. After a
//! Ramsey sequence of length `tau` with readout phase `phi`, the click
//! probability at detuning `f` is
//!
//! ```text
//! P(click | f) = alpha * [1 - V0 * exp(-(tau/T2*)^2) * cos(2 pi f tau - phi)]
//! ```
//!
//! with `alpha` the mean of the two click probabilities and `V0` the
//! time-independent visibility. The Gaussian envelope is applied here, so
//! `V0` itself never carries a decay factor.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower/upper clamp applied to every detection probability so that
/// log-likelihoods stay finite.
pub const PROB_EPSILON: f64 = 1e-12;

/// Wrap an angle into `[0, 2π)`.
pub fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    // rem_euclid can return exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Shortest distance between two angles on the circle, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    p_click_m0: f64,
    p_click_m1: f64,
    t2_star: f64,
}

impl SensorModel {
    /// Typical calibration of the ambient NV setup: P(click|m0) = 0.03419,
    /// P(click|m1) = 0.0251, T2* = 3.5 µs.
    pub const REFERENCE: SensorModel = SensorModel {
        p_click_m0: 0.03419,
        p_click_m1: 0.0251,
        t2_star: 3.5e-6,
    };

    /// Builds a model, requiring `0 < p_click_m1 < p_click_m0 < 1` and `t2_star > 0`.
    pub fn new(p_click_m0: f64, p_click_m1: f64, t2_star: f64) -> Result<Self> {
        if !(p_click_m1 > 0.0 && p_click_m1 < p_click_m0 && p_click_m0 < 1.0) {
            return Err(Error::InvalidSensor(format!(
                "need 0 < p_click_m1 < p_click_m0 < 1, got m0={p_click_m0}, m1={p_click_m1}"
            )));
        }
        Self::new_unchecked_levels(p_click_m0, p_click_m1, t2_star)
    }

    /// Builds a zero-contrast model (`p_click_m0 == p_click_m1`). Such a sensor
    /// carries no information about the detuning; it exists for degenerate
    /// testing of the estimation pipeline.
    pub fn flat(p_click: f64, t2_star: f64) -> Result<Self> {
        if !(p_click > 0.0 && p_click < 1.0) {
            return Err(Error::InvalidSensor(format!(
                "click probability {p_click} outside (0, 1)"
            )));
        }
        Self::new_unchecked_levels(p_click, p_click, t2_star)
    }

    fn new_unchecked_levels(p_click_m0: f64, p_click_m1: f64, t2_star: f64) -> Result<Self> {
        if !(t2_star > 0.0 && t2_star.is_finite()) {
            return Err(Error::InvalidSensor(format!("t2_star must be positive, got {t2_star}")));
        }
        Ok(Self {
            p_click_m0,
            p_click_m1,
            t2_star,
        })
    }

    pub fn p_click_m0(&self) -> f64 {
        self.p_click_m0
    }

    pub fn p_click_m1(&self) -> f64 {
        self.p_click_m1
    }

    pub fn t2_star(&self) -> f64 {
        self.t2_star
    }

    /// Mean click probability of the two spin states.
    pub fn threshold_alpha(&self) -> f64 {
        0.5 * (self.p_click_m0 + self.p_click_m1)
    }

    /// Time-independent visibility `(p0 - p1) / (p0 + p1)`.
    pub fn base_visibility(&self) -> f64 {
        (self.p_click_m0 - self.p_click_m1) / (self.p_click_m0 + self.p_click_m1)
    }

    /// Gaussian dephasing envelope `exp(-(tau/T2*)^2)`.
    pub fn decay(&self, tau: f64) -> f64 {
        let x = tau / self.t2_star;
        (-x * x).exp()
    }

    /// Visibility of the fringe after sensing for `tau`.
    pub fn effective_visibility(&self, tau: f64) -> f64 {
        self.base_visibility() * self.decay(tau)
    }

    /// Click probability for one shot at detuning `f` (Hz).
    pub fn p_detect(&self, setting: &MeasurementSetting, f: f64) -> f64 {
        let amplitude = self.effective_visibility(setting.tau());
        let x = TAU * f * setting.tau() - setting.phi();
        clamp_probability(self.threshold_alpha() * (1.0 - amplitude * x.cos()))
    }

    /// Readout contrast of an `repetitions`-shot batch.
    pub fn contrast(&self, repetitions: u64) -> Result<f64> {
        let (a0, a1) = (self.p_click_m0, self.p_click_m1);
        let gap = a0 - a1;
        if gap == 0.0 {
            return Err(Error::ZeroContrast);
        }
        if repetitions == 0 {
            return Err(Error::InvalidSetting("repetitions must be >= 1".into()));
        }
        let noise = 2.0 * (a0 + a1) / (gap * gap * repetitions as f64);
        Ok((1.0 + noise).powf(-0.5))
    }
}

impl Default for SensorModel {
    fn default() -> Self {
        Self::REFERENCE
    }
}

pub(crate) fn clamp_probability(p: f64) -> f64 {
    p.clamp(PROB_EPSILON, 1.0 - PROB_EPSILON)
}

/// Knobs for a single batch: sensing time, readout phase and batch size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    tau: f64,
    phi: f64,
    repetitions: u64,
}

impl MeasurementSetting {
    /// The phase is wrapped into `[0, 2π)`.
    pub fn new(tau: f64, phi: f64, repetitions: u64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidSetting(format!("tau must be positive, got {tau}")));
        }
        if repetitions == 0 {
            return Err(Error::InvalidSetting("repetitions must be >= 1".into()));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidSetting(format!("phase must be finite, got {phi}")));
        }
        Ok(Self {
            tau,
            phi: wrap_phase(phi),
            repetitions,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn repetitions(&self) -> u64 {
        self.repetitions
    }

    /// Same setting with the readout phase rotated by `delta`.
    pub fn rotated(&self, delta: f64) -> Self {
        Self {
            phi: wrap_phase(self.phi + delta),
            ..*self
        }
    }

    /// Same setting with the readout phase flipped by π.
    pub fn inverted(&self) -> Self {
        self.rotated(PI)
    }
}
