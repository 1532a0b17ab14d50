//! Exponential sensing-time plan and the non-adaptive phase ramp.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensor::SensorModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Sensing time doubles every block.
    Exponential,
    /// Constant sensing time `T2*` after the exponential blocks.
    Extended,
}

/// One sensing-time block: `iterations` batches at sensing time `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Block {
    /// Exponent index; the extended block uses `k_max + 1`.
    pub k: u32,
    pub tau: f64,
    pub iterations: u32,
    pub regime: Regime,
}

/// Flattened schedule entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleStep {
    pub k: u32,
    pub tau: f64,
    pub m_k: u32,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    tau0: f64,
    k_max: u32,
    g: u32,
    f: u32,
    extended_iterations: u32,
    extended_tau: f64,
}

impl Schedule {
    /// `tau_k = 2^k tau0` for `k = 0..=k_max`, each repeated
    /// `M_k = g + (k_max - k) f` times, followed by `extended_iterations`
    /// batches at `tau = T2*`.
    pub fn new(
        tau0: f64,
        k_max: u32,
        g: u32,
        f: u32,
        extended_iterations: u32,
        model: &SensorModel,
    ) -> Result<Self> {
        if !(tau0 > 0.0 && tau0.is_finite()) {
            return Err(Error::InvalidSchedule(format!("tau0 must be positive, got {tau0}")));
        }
        if k_max > 40 {
            return Err(Error::InvalidSchedule(format!("k_max {k_max} is unreasonably large")));
        }
        let longest = tau0 * 2f64.powi(k_max as i32);
        if longest >= model.t2_star() {
            return Err(Error::InvalidSchedule(format!(
                "longest sensing time {longest:e} s must stay below T2* = {:e} s",
                model.t2_star()
            )));
        }
        if g == 0 {
            return Err(Error::InvalidSchedule("G must be >= 1".into()));
        }
        Ok(Self {
            tau0,
            k_max,
            g,
            f,
            extended_iterations,
            extended_tau: model.t2_star(),
        })
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    pub fn extended_iterations(&self) -> u32 {
        self.extended_iterations
    }

    pub fn iterations_for(&self, k: u32) -> u32 {
        self.g + (self.k_max - k) * self.f
    }

    pub fn tau_for(&self, k: u32) -> f64 {
        self.tau0 * 2f64.powi(k as i32)
    }

    /// Blocks in execution order; the extended block is present only when
    /// `extended_iterations > 0`.
    pub fn blocks(&self) -> Vec<Block> {
        let mut blocks: Vec<Block> = (0..=self.k_max)
            .map(|k| Block {
                k,
                tau: self.tau_for(k),
                iterations: self.iterations_for(k),
                regime: Regime::Exponential,
            })
            .collect();
        if self.extended_iterations > 0 {
            blocks.push(Block {
                k: self.k_max + 1,
                tau: self.extended_tau,
                iterations: self.extended_iterations,
                regime: Regime::Extended,
            });
        }
        blocks
    }

    pub fn steps(&self) -> Vec<ScheduleStep> {
        self.blocks()
            .into_iter()
            .flat_map(|b| {
                std::iter::repeat_n(
                    ScheduleStep {
                        k: b.k,
                        tau: b.tau,
                        m_k: b.iterations,
                        regime: b.regime,
                    },
                    b.iterations as usize,
                )
            })
            .collect()
    }

    pub fn exponential_iterations(&self) -> u32 {
        (0..=self.k_max).map(|k| self.iterations_for(k)).sum()
    }

    pub fn total_iterations(&self) -> u32 {
        self.exponential_iterations() + self.extended_iterations
    }

    /// `sum_k M_k tau_k` over the exponential blocks.
    pub fn exponential_sensing_time(&self) -> f64 {
        (0..=self.k_max)
            .map(|k| self.iterations_for(k) as f64 * self.tau_for(k))
            .sum()
    }
}

/// Linear ramp `pi * m / M_k` over a block, starting at zero and stopping
/// short of pi.
pub fn next_phase_nonadaptive(m: u32, m_k: u32) -> f64 {
    debug_assert!(m < m_k.max(1));
    if m_k <= 1 {
        0.0
    } else {
        PI * m as f64 / m_k as f64
    }
}

/// Uniform random phase in `[0, pi)` used in the extended regime.
pub fn random_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(0.0..PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sensor() -> SensorModel {
        SensorModel::REFERENCE
    }

    #[test]
    fn reference_schedule() {
        let s = Schedule::new(100e-9, 4, 3, 2, 0, &sensor()).unwrap();
        let blocks = s.blocks();
        let taus: Vec<f64> = blocks.iter().map(|b| b.tau * 1e9).collect();
        let ms: Vec<u32> = blocks.iter().map(|b| b.iterations).collect();
        for (t, e) in taus.iter().zip([100.0, 200.0, 400.0, 800.0, 1600.0]) {
            assert_relative_eq!(*t, e, max_relative = 1e-12);
        }
        assert_eq!(ms, vec![11, 9, 7, 5, 3]);
        assert_eq!(s.exponential_iterations(), 35);
        assert_eq!(s.steps().len(), 35);
        assert_relative_eq!(s.exponential_sensing_time(), 14.5e-6, max_relative = 1e-12);
        // shortest first
        let steps = s.steps();
        assert!(steps.windows(2).all(|w| w[0].tau <= w[1].tau));
    }

    #[test]
    fn degenerate_schedules() {
        let s = Schedule::new(100e-9, 4, 1, 0, 0, &sensor()).unwrap();
        assert!(s.blocks().iter().all(|b| b.iterations == 1));
        let s = Schedule::new(100e-9, 0, 3, 2, 0, &sensor()).unwrap();
        assert_eq!(s.steps().len(), 3);
        assert_eq!(s.steps()[0].tau, 100e-9);
    }

    #[test]
    fn extended_block() {
        let s = Schedule::new(100e-9, 4, 3, 2, 70, &sensor()).unwrap();
        let steps = s.steps();
        assert_eq!(steps.len(), 105);
        assert_eq!(steps[35].regime, Regime::Extended);
        assert_eq!(steps[35].k, 5);
        assert_eq!(steps[104].tau, 3.5e-6);
    }

    #[test]
    fn rejects_schedule_beyond_dephasing() {
        assert!(matches!(
            Schedule::new(100e-9, 6, 3, 2, 0, &sensor()),
            Err(Error::InvalidSchedule(_))
        ));
        assert!(Schedule::new(100e-9, 4, 0, 2, 0, &sensor()).is_err());
    }

    #[test]
    fn ramp_phases() {
        let phases: Vec<f64> = (0..4).map(|m| next_phase_nonadaptive(m, 4)).collect();
        assert_eq!(phases, vec![0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0]);
        assert_eq!(next_phase_nonadaptive(0, 1), 0.0);
    }

    #[test]
    fn random_phases_are_seeded() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10).map(|_| random_phase(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
        assert!(draw(9).iter().all(|&p| (0.0..PI).contains(&p)));
    }
}
