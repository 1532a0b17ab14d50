//! Wall-clock latency of a single binomial Bayesian update.

use std::f64::consts::PI;
use std::time::Instant;

use serde::Serialize;

use crate::grid::FrequencyGrid;
use crate::likelihood::{log_likelihood_binomial_into, BatchOutcome};
use crate::posterior::Posterior;
use crate::sensor::{MeasurementSetting, SensorModel};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyStats {
    pub n_bins: usize,
    pub updates: usize,
    pub median_s: f64,
    pub p99_s: f64,
    pub mean_s: f64,
    pub max_s: f64,
}

/// Times `updates` full binomial updates (likelihood, posterior update, peak
/// and mean) on a single thread. Settings cycle through the sensing times
/// and click counts of a realistic run so nothing is trivially cached.
pub fn latency_bench(model: &SensorModel, grid: &FrequencyGrid, repetitions: u64, updates: usize) -> LatencyStats {
    assert!(updates > 0, "need at least one update to time");
    let mut posterior = Posterior::uniform(*grid);
    let mut log_lik = vec![0.0; grid.n_bins()];
    let expected = (repetitions as f64 * model.threshold_alpha()).round() as u64;
    let outcomes: Vec<BatchOutcome> = (0..64u64)
        .map(|i| {
            let tau = 100e-9 * f64::from(1u32 << (i % 5));
            let phi = PI * (i % 11) as f64 / 11.0;
            let setting = MeasurementSetting::new(tau, phi, repetitions).expect("valid bench setting");
            let clicks = (expected + i % 7).saturating_sub(3).min(repetitions);
            BatchOutcome::new(clicks, setting).expect("clicks bounded by repetitions")
        })
        .collect();

    let mut samples = Vec::with_capacity(updates);
    let mut sink = 0.0;
    for i in 0..updates {
        // keep the posterior from collapsing to a single bin over long benches
        if i % 64 == 0 {
            posterior = Posterior::uniform(*grid);
        }
        let outcome = &outcomes[i % outcomes.len()];
        let start = Instant::now();
        log_likelihood_binomial_into(model, outcome, grid, &mut log_lik);
        posterior.update(&log_lik).expect("clamped likelihoods are finite");
        sink += posterior.estimate_peak() + posterior.estimate_mean();
        samples.push(start.elapsed().as_secs_f64());
    }
    std::hint::black_box(sink);

    samples.sort_by(f64::total_cmp);
    let quantile = |q: f64| samples[((q * samples.len() as f64).ceil() as usize).clamp(1, samples.len()) - 1];
    LatencyStats {
        n_bins: grid.n_bins(),
        updates,
        median_s: quantile(0.5),
        p99_s: quantile(0.99),
        mean_s: samples.iter().sum::<f64>() / samples.len() as f64,
        max_s: *samples.last().expect("non-empty"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_are_ordered() {
        let grid = FrequencyGrid::dynamic_range(100e-9, 25e3).unwrap();
        let s = latency_bench(&SensorModel::REFERENCE, &grid, 2500, 500);
        assert_eq!(s.updates, 500);
        assert!(s.median_s > 0.0);
        assert!(s.median_s <= s.p99_s && s.p99_s <= s.max_s);
    }
}
