//! One closed-loop estimation: sample, likelihood, Bayesian update, next setting.

use serde::Serialize;

use crate::control::Controller;
use crate::error::Result;
use crate::harness::config::{Method, Setup, UpdateRule};
use crate::likelihood::{
    classify_majority, log_likelihood_binomial_into, log_likelihood_majority_into, majority_threshold,
    BatchOutcome,
};
use crate::posterior::Posterior;
use crate::schedule::Regime;
use crate::sim::{rng_from_seed, sample_counts, GroundTruth, TimeAccounting};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    /// 1-based; iteration 0 is the prior.
    pub iter: u32,
    pub k: u32,
    pub regime: Regime,
    pub tau: f64,
    pub phi: f64,
    pub repetitions: u64,
    pub clicks: u64,
    /// Thresholded state, majority-voting runs only.
    pub u: Option<u8>,
    pub f_peak: f64,
    pub f_mean: f64,
    pub sensing_time: f64,
    pub total_time: f64,
    pub shots: u64,
    pub advanced_early: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub method: Method,
    pub repetitions: u64,
    pub truth: GroundTruth,
    /// Estimates of the untouched prior.
    pub prior_peak: f64,
    pub prior_mean: f64,
    pub records: Vec<IterationRecord>,
    /// Normalized posterior after each iteration, when requested.
    pub snapshots: Option<Vec<Vec<f64>>>,
}

impl Trajectory {
    /// Peak estimate after `iter` iterations; runs that finished earlier keep
    /// their final estimate.
    pub fn peak_at(&self, iter: usize) -> f64 {
        if iter == 0 || self.records.is_empty() {
            self.prior_peak
        } else {
            self.records[iter.min(self.records.len()) - 1].f_peak
        }
    }

    pub fn final_peak(&self) -> f64 {
        self.peak_at(self.records.len())
    }

    /// Sensing time, total time and shot count after `iter` iterations.
    pub fn times_at(&self, iter: usize) -> (f64, f64, u64) {
        if iter == 0 || self.records.is_empty() {
            (0.0, 0.0, 0)
        } else {
            let r = &self.records[iter.min(self.records.len()) - 1];
            (r.sensing_time, r.total_time, r.shots)
        }
    }
}

/// Runs one estimation of `truth.f_true` with the given method and batch size.
/// The run's randomness comes from `truth.rng_seed` only.
pub fn run_single(
    setup: &Setup,
    method: Method,
    repetitions: u64,
    truth: GroundTruth,
    keep_snapshots: bool,
) -> Result<Trajectory> {
    let Setup {
        model,
        grid,
        schedule,
        shot_overhead,
    } = setup;
    let mut rng = rng_from_seed(truth.rng_seed);
    let mut posterior = Posterior::uniform(*grid);
    let mut controller = Controller::new(*model, schedule, method.strategy, repetitions);
    let mut clock = TimeAccounting::new(*shot_overhead);
    let threshold = majority_threshold(model, repetitions);
    let mut log_lik = vec![0.0; grid.n_bins()];
    let mut records = Vec::with_capacity(schedule.total_iterations() as usize);
    let mut snapshots = keep_snapshots.then(Vec::new);
    let prior_peak = posterior.estimate_peak();
    let prior_mean = posterior.estimate_mean();

    let mut f_mean = prior_mean;
    while let Some(step) = controller.next_step(f_mean, &mut rng) {
        let outcome: BatchOutcome = sample_counts(model, &step.setting, truth.f_true, &mut rng);
        let u = match method.update {
            UpdateRule::Binomial => {
                log_likelihood_binomial_into(model, &outcome, grid, &mut log_lik);
                None
            }
            UpdateRule::Majority => {
                let u = classify_majority(&outcome, threshold);
                // The binary fringe puts u = 0 at zero accumulated phase while
                // the click model is darkest there; a pi shift of the readout
                // phase puts both on the same sensor.
                let aligned = step.setting.inverted();
                log_likelihood_majority_into(model, u, &aligned, grid, &mut log_lik);
                Some(u.as_u8())
            }
        };
        posterior.update(&log_lik)?;
        clock.advance(&step.setting);
        controller.observe(&outcome);
        f_mean = posterior.estimate_mean();
        records.push(IterationRecord {
            iter: records.len() as u32 + 1,
            k: step.k,
            regime: step.regime,
            tau: step.setting.tau(),
            phi: step.setting.phi(),
            repetitions,
            clicks: outcome.clicks(),
            u,
            f_peak: posterior.estimate_peak(),
            f_mean,
            sensing_time: clock.sensing_time,
            total_time: clock.total_time,
            shots: clock.shots,
            advanced_early: step.advanced_early,
        });
        if let Some(s) = snapshots.as_mut() {
            s.push(posterior.weights().to_vec());
        }
    }

    Ok(Trajectory {
        method,
        repetitions,
        truth,
        prior_peak,
        prior_mean,
        records,
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::Strategy;
    use crate::harness::config::ExperimentConfig;
    use crate::sensor::SensorModel;

    fn setup(extended: u32) -> Setup {
        let mut cfg = ExperimentConfig::default();
        cfg.schedule.extended_iterations = extended;
        cfg.setup().unwrap()
    }

    #[test]
    fn flat_sensor_learns_nothing() {
        let mut s = setup(0);
        s.model = SensorModel::flat(0.03, 3.5e-6).unwrap();
        let t = run_single(
            &s,
            Method::new(UpdateRule::Binomial, Strategy::Nonadaptive),
            1000,
            GroundTruth { f_true: 1.2e6, rng_seed: 3 },
            true,
        )
        .unwrap();
        assert_eq!(t.records.len(), 35);
        assert_eq!(t.final_peak(), s.grid.center(0));
        let last = t.snapshots.as_ref().unwrap().last().unwrap();
        assert!(last.iter().all(|&w| (w - 1.0 / 400.0).abs() < 1e-15));
    }

    #[test]
    fn trajectory_shape_and_times() {
        let s = setup(10);
        let t = run_single(
            &s,
            Method::new(UpdateRule::Majority, Strategy::Nonadaptive),
            500,
            GroundTruth { f_true: -0.4e6, rng_seed: 11 },
            false,
        )
        .unwrap();
        assert_eq!(t.records.len(), 45);
        assert!(t.records.iter().all(|r| r.u.is_some()));
        assert!(t.records.windows(2).all(|w| w[0].total_time <= w[1].total_time
            && w[0].sensing_time <= w[1].sensing_time));
        assert_eq!(t.records.last().unwrap().shots, 45 * 500);
        assert!(t.snapshots.is_none());
    }

    #[test]
    fn runs_replay_from_seed() {
        let s = setup(5);
        let m = Method::new(UpdateRule::Binomial, Strategy::Adaptive);
        let truth = GroundTruth { f_true: 0.77e6, rng_seed: 99 };
        assert_eq!(run_single(&s, m, 800, truth, true).unwrap(), run_single(&s, m, 800, truth, true).unwrap());
    }

    #[test]
    fn optimized_never_longer_than_nonadaptive() {
        let s = setup(20);
        for seed in 0..20 {
            let truth = GroundTruth { f_true: -1.9e6 + 0.2e6 * seed as f64, rng_seed: seed };
            let non = run_single(&s, Method::new(UpdateRule::Binomial, Strategy::Nonadaptive), 1000, truth, false)
                .unwrap();
            let opt = run_single(
                &s,
                Method::new(UpdateRule::Binomial, Strategy::AdaptiveOptimized),
                1000,
                truth,
                false,
            )
            .unwrap();
            assert!(opt.records.len() <= non.records.len());
        }
    }

    #[test]
    fn large_batches_lock_onto_the_truth() {
        let s = setup(0);
        let m = Method::new(UpdateRule::Binomial, Strategy::Nonadaptive);
        let width = s.grid.bin_width();
        let mut hits = 0;
        for seed in 0..100u64 {
            // bin centres spread over [-2, 2] MHz
            let f_true = s.grid.center(120 + (seed as usize * 160) / 100);
            let t = run_single(&s, m, 100_000, GroundTruth { f_true, rng_seed: seed }, false).unwrap();
            if (t.final_peak() - f_true).abs() <= width * 1.0001 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "only {hits}/100 runs within one bin");
    }
}
