//! Readout-phase control: Fisher-information optimal phases, the
//! early-advance rule, and the per-run controller state machine.
//!
//! With `q = r/R` the observed click fraction and `L = alpha [1 - V cos x]`
//! the detection model (`x = 2 pi f tau - phi`), the Fisher information of a
//! batch is approximately
//!
//! ```text
//! I(x) = C sin^2 x / (A + B cos x)
//! A = q^2 + (1 - 2q) alpha
//! B = -(1 - 2q) alpha V
//! C = 4 R alpha^2 V^2 pi^2 tau^2
//! ```
//!
//! `B` carries a minus sign because the fringe is `1 - V cos x`. Setting
//! `dI/dx = 0` away from `sin x = 0` gives `B cos^2 x + 2A cos x + B = 0`,
//! whose root inside `[-1, 1]` is `cos x* = -B / (A + sqrt(A^2 - B^2))`.

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::BatchOutcome;
use crate::schedule::{next_phase_nonadaptive, random_phase, Block, Regime, Schedule};
use crate::sensor::{circular_distance, wrap_phase, MeasurementSetting, SensorModel};

/// Default stabilization tolerance of the early-advance rule, `0.1/pi` rad.
pub const DEFAULT_PHASE_EPSILON: f64 = 0.1 / PI;
/// Default number of consecutive steady phases before advancing.
pub const DEFAULT_PHASE_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl FisherCoefficients {
    /// Coefficients for a batch of `repetitions` shots at sensing time `tau`,
    /// given `clicks` observed in the reference batch.
    pub fn new(model: &SensorModel, tau: f64, clicks: u64, repetitions: u64) -> Self {
        let q = clicks as f64 / repetitions as f64;
        let alpha = model.threshold_alpha();
        let v = model.effective_visibility(tau);
        Self::from_parts(q, repetitions as f64, alpha, v, tau)
    }

    pub fn from_parts(q: f64, repetitions: f64, alpha: f64, visibility: f64, tau: f64) -> Self {
        let tilt = 1.0 - 2.0 * q;
        Self {
            a: q * q + tilt * alpha,
            b: -tilt * alpha * visibility,
            c: 4.0 * repetitions * (alpha * visibility * PI * tau).powi(2),
        }
    }

    /// Information at phase offset `x = 2 pi f tau - phi`.
    pub fn information(&self, x: f64) -> Result<f64> {
        let denom = self.a + self.b * x.cos();
        if !(denom > 0.0) {
            return Err(Error::InvalidOperatingPoint(denom));
        }
        let s = x.sin();
        Ok(self.c * s * s / denom)
    }

    /// Offset `x* in [0, pi]` maximizing the information; the mirror `-x*`
    /// is an equal maximum. `None` when `A = 0`.
    pub fn optimal_offset(&self) -> Option<f64> {
        if self.a == 0.0 {
            return None;
        }
        let disc = (self.a * self.a - self.b * self.b).max(0.0).sqrt();
        let cos_x = (-self.b / (self.a + disc)).clamp(-1.0, 1.0);
        Some(cos_x.acos())
    }
}

/// Fisher information about the detuning at `f` for `setting`, with `clicks`
/// the click count used to linearize the variance.
pub fn fisher_information(
    model: &SensorModel,
    setting: &MeasurementSetting,
    clicks: u64,
    f: f64,
) -> Result<f64> {
    if clicks > setting.repetitions() {
        return Err(Error::InvalidOutcome {
            clicks,
            repetitions: setting.repetitions(),
        });
    }
    let coeffs = FisherCoefficients::new(model, setting.tau(), clicks, setting.repetitions());
    coeffs.information(TAU * f * setting.tau() - setting.phi())
}

/// Readout phase for the next batch at `tau_next`, maximizing the Fisher
/// information at the posterior mean `f_mean`. The click fraction of the
/// previous batch `prev` enters the variance model. Wrapped into `[0, 2pi)`.
pub fn optimal_phase(model: &SensorModel, prev: &BatchOutcome, f_mean: f64, tau_next: f64) -> f64 {
    let coeffs = FisherCoefficients::new(model, tau_next, prev.clicks(), prev.repetitions());
    let offset = coeffs.optimal_offset().unwrap_or(FRAC_PI_2);
    wrap_phase(TAU * f_mean * tau_next - offset)
}

/// Ring of the most recent phases chosen within the current block.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseHistory {
    window: usize,
    phases: VecDeque<f64>,
}

impl PhaseHistory {
    pub fn new(window: usize) -> Self {
        Self {
            window,
            phases: VecDeque::with_capacity(window),
        }
    }

    pub fn push(&mut self, phase: f64) {
        if self.phases.len() == self.window {
            self.phases.pop_front();
        }
        self.phases.push_back(wrap_phase(phase));
    }

    pub fn clear(&mut self) {
        self.phases.clear();
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.phases.iter().copied()
    }
}

impl FromIterator<f64> for PhaseHistory {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let phases: VecDeque<f64> = iter.into_iter().map(wrap_phase).collect();
        Self {
            window: phases.len(),
            phases,
        }
    }
}

/// True when the last `window` phases are pairwise within `epsilon` on the circle.
pub fn should_advance(history: &PhaseHistory, epsilon: f64, window: usize) -> bool {
    assert!(window >= 2, "stopping window must be at least 2");
    if history.len() < window {
        return false;
    }
    let recent: Vec<f64> = history.iter().skip(history.len() - window).collect();
    recent
        .iter()
        .enumerate()
        .all(|(i, &a)| recent[i + 1..].iter().all(|&b| circular_distance(a, b) <= epsilon))
}

/// How readout phases are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Linear ramp in the exponential regime, random phases in the extended one.
    Nonadaptive,
    /// Fisher-optimal phase every iteration.
    Adaptive,
    /// Fisher-optimal phase, advancing to the next sensing time once the
    /// phase has settled.
    AdaptiveOptimized,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Nonadaptive => "nonadaptive",
            Strategy::Adaptive => "adaptive",
            Strategy::AdaptiveOptimized => "adaptive_optimized",
        }
    }
}

/// A planned batch, as chosen by the controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlannedStep {
    pub k: u32,
    pub regime: Regime,
    pub setting: MeasurementSetting,
    /// Set on the first batch after an early advance.
    pub advanced_early: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub epsilon: f64,
    pub window: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_PHASE_EPSILON,
            window: DEFAULT_PHASE_WINDOW,
        }
    }
}

/// Per-run state machine that walks the schedule and picks phases.
#[derive(Debug, Clone)]
pub struct Controller {
    model: SensorModel,
    blocks: Vec<Block>,
    strategy: Strategy,
    repetitions: u64,
    stopping: StoppingRule,
    block: usize,
    within: u32,
    history: PhaseHistory,
    previous: Option<BatchOutcome>,
    pending_advance: bool,
}

impl Controller {
    pub fn new(model: SensorModel, schedule: &Schedule, strategy: Strategy, repetitions: u64) -> Self {
        Self::with_stopping_rule(model, schedule, strategy, repetitions, StoppingRule::default())
    }

    pub fn with_stopping_rule(
        model: SensorModel,
        schedule: &Schedule,
        strategy: Strategy,
        repetitions: u64,
        stopping: StoppingRule,
    ) -> Self {
        Self {
            model,
            blocks: schedule.blocks(),
            strategy,
            repetitions,
            stopping,
            block: 0,
            within: 0,
            history: PhaseHistory::new(stopping.window),
            previous: None,
            pending_advance: false,
        }
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    /// Next batch to run, or `None` when the schedule is exhausted.
    /// `f_mean` is the current posterior mean.
    pub fn next_step<R: Rng + ?Sized>(&mut self, f_mean: f64, rng: &mut R) -> Option<PlannedStep> {
        while self.block < self.blocks.len() && self.within >= self.blocks[self.block].iterations {
            self.enter_next_block();
        }
        let block = *self.blocks.get(self.block)?;
        let phi = match self.strategy {
            Strategy::Nonadaptive => match block.regime {
                Regime::Exponential => next_phase_nonadaptive(self.within, block.iterations),
                Regime::Extended => random_phase(rng),
            },
            Strategy::Adaptive | Strategy::AdaptiveOptimized => match &self.previous {
                Some(prev) => optimal_phase(&self.model, prev, f_mean, block.tau),
                // no batch yet: quadrature at the prior mean
                None => wrap_phase(TAU * f_mean * block.tau - FRAC_PI_2),
            },
        };
        let setting = MeasurementSetting::new(block.tau, phi, self.repetitions)
            .expect("schedule and repetitions were validated");
        let advanced_early = std::mem::take(&mut self.pending_advance);
        Some(PlannedStep {
            k: block.k,
            regime: block.regime,
            setting,
            advanced_early,
        })
    }

    /// Records the outcome of the batch returned by the last `next_step`.
    pub fn observe(&mut self, outcome: &BatchOutcome) {
        self.previous = Some(*outcome);
        self.within += 1;
        self.history.push(outcome.setting().phi());
        let block = self.blocks[self.block];
        let can_skip = self.strategy == Strategy::AdaptiveOptimized
            && block.regime == Regime::Exponential
            && self.within < block.iterations;
        if can_skip && should_advance(&self.history, self.stopping.epsilon, self.stopping.window) {
            self.enter_next_block();
            self.pending_advance = true;
        }
    }

    fn enter_next_block(&mut self) {
        self.block += 1;
        self.within = 0;
        self.history.clear();
    }
}
