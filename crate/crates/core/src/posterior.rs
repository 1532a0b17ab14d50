//! Grid posterior over the detuning and the point estimates drawn from it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;

/// Discretized distribution over detuning. Log-weights are stored with their
/// maximum pinned at zero; `weights` holds the normalized linear values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Posterior {
    grid: FrequencyGrid,
    log_weights: Vec<f64>,
    weights: Vec<f64>,
}

impl Posterior {
    pub fn uniform(grid: FrequencyGrid) -> Self {
        let n = grid.n_bins();
        Self {
            grid,
            log_weights: vec![0.0; n],
            weights: vec![1.0 / n as f64; n],
        }
    }

    /// Builds a posterior from arbitrary (finite) log-weights.
    pub fn from_log_weights(grid: FrequencyGrid, log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.len() != grid.n_bins() {
            return Err(Error::LengthMismatch {
                expected: grid.n_bins(),
                got: log_weights.len(),
            });
        }
        let mut p = Self {
            grid,
            weights: vec![0.0; log_weights.len()],
            log_weights,
        };
        p.renormalize()?;
        Ok(p)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Normalized weights, summing to one.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Multiplies in a likelihood (adds in log space) and renormalizes.
    pub fn update(&mut self, log_likelihood: &[f64]) -> Result<()> {
        if log_likelihood.len() != self.log_weights.len() {
            return Err(Error::LengthMismatch {
                expected: self.log_weights.len(),
                got: log_likelihood.len(),
            });
        }
        for (w, l) in self.log_weights.iter_mut().zip(log_likelihood) {
            *w += l;
        }
        self.renormalize()
    }

    fn renormalize(&mut self) -> Result<()> {
        let max = self
            .log_weights
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::DegeneratePosterior);
        }
        let mut sum = 0.0;
        for (lw, w) in self.log_weights.iter_mut().zip(self.weights.iter_mut()) {
            *lw -= max;
            *w = lw.exp();
            sum += *w;
        }
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(Error::DegeneratePosterior);
        }
        let inv = 1.0 / sum;
        for w in &mut self.weights {
            *w *= inv;
        }
        Ok(())
    }

    /// Index of the largest weight; ties go to the lowest index.
    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.log_weights.iter().enumerate().skip(1) {
            if w > self.log_weights[best] {
                best = i;
            }
        }
        best
    }

    /// Bin-centre frequency of the maximum weight.
    pub fn estimate_peak(&self) -> f64 {
        self.grid.center(self.peak_index())
    }

    /// Posterior mean over bin centres.
    pub fn estimate_mean(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * self.grid.center(i))
            .sum()
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .weights
            .iter()
            .filter(|&&w| w > 0.0)
            .map(|w| w * w.ln())
            .sum::<f64>()
    }
}

/// Root of the mean squared error between estimates and truths.
pub fn rmse(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::EmptyInput);
    }
    if estimates.len() != truths.len() {
        return Err(Error::LengthMismatch {
            expected: estimates.len(),
            got: truths.len(),
        });
    }
    let sq: f64 = estimates
        .iter()
        .zip(truths)
        .map(|(e, t)| (e - t) * (e - t))
        .sum();
    Ok((sq / estimates.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::collection::vec;
    use proptest::prelude::*;

    fn grid(n: usize) -> FrequencyGrid {
        FrequencyGrid::new(-1.0, 1.0, n).unwrap()
    }

    #[test]
    fn uniform_prior() {
        let p = Posterior::uniform(FrequencyGrid::dynamic_range(100e-9, 25e3).unwrap());
        assert!(p.weights().iter().all(|&w| w == 0.0025));
        assert_relative_eq!(p.entropy(), 400f64.ln(), max_relative = 1e-12);
        let p = Posterior::uniform(grid(2));
        assert_eq!(p.weights(), &[0.5, 0.5]);
        assert_eq!(p.estimate_mean(), 0.0);
    }

    #[test]
    fn flat_prior_returns_normalized_likelihood() {
        let mut p = Posterior::uniform(grid(4));
        let l = [0.1f64.ln(), 0.2f64.ln(), 0.3f64.ln(), 0.4f64.ln()];
        p.update(&l).unwrap();
        for (w, e) in p.weights().iter().zip([0.1, 0.2, 0.3, 0.4]) {
            assert_relative_eq!(*w, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn flat_likelihood_leaves_prior() {
        let mut p = Posterior::from_log_weights(grid(3), vec![-1.0, 0.5, 2.0]).unwrap();
        let before = p.weights().to_vec();
        p.update(&[-7.0; 3]).unwrap();
        for (a, b) in p.weights().iter().zip(before) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let mut p = Posterior::uniform(grid(3));
        assert_eq!(
            p.update(&[0.0; 2]),
            Err(Error::LengthMismatch { expected: 3, got: 2 })
        );
    }

    #[test]
    fn non_finite_likelihood_is_degenerate() {
        let mut p = Posterior::uniform(grid(2));
        assert_eq!(p.update(&[f64::NEG_INFINITY; 2]), Err(Error::DegeneratePosterior));
    }

    #[test]
    fn peak_estimates() {
        let g = FrequencyGrid::new(-1.5e6, 1.5e6, 3).unwrap();
        let p = Posterior::from_log_weights(g, vec![0.1f64.ln(), 0.7f64.ln(), 0.2f64.ln()]).unwrap();
        assert_eq!(p.estimate_peak(), 0.0);
        let p = Posterior::from_log_weights(g, vec![0.0, -1.0, 0.0]).unwrap();
        assert_eq!(p.estimate_peak(), -1e6);
    }

    #[test]
    fn mean_estimate() {
        let g = FrequencyGrid::new(-0.5e6, 1.5e6, 2).unwrap();
        let p = Posterior::from_log_weights(g, vec![0.25f64.ln(), 0.75f64.ln()]).unwrap();
        assert_relative_eq!(p.estimate_mean(), 0.75e6, max_relative = 1e-12);
    }

    #[test]
    fn rmse_values() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_relative_eq!(rmse(&[1e6, 2e6], &[1e6, 1e6]).unwrap(), 0.5f64.sqrt() * 1e6);
        assert_eq!(rmse(&[], &[]), Err(Error::EmptyInput));
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn sequential_updates_equal_combined_update() {
        let l1: Vec<f64> = (0..16).map(|i| -((i as f64) - 4.0).powi(2) * 0.3).collect();
        let l2: Vec<f64> = (0..16).map(|i| ((i as f64) * 0.7).sin() * 5.0).collect();
        let mut seq = Posterior::uniform(grid(16));
        seq.update(&l1).unwrap();
        seq.update(&l2).unwrap();
        let both: Vec<f64> = l1.iter().zip(&l2).map(|(a, b)| a + b).collect();
        let mut once = Posterior::uniform(grid(16));
        once.update(&both).unwrap();
        for (a, b) in seq.weights().iter().zip(once.weights()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    fn sum_exact(weights: &[f64], grid: &FrequencyGrid) -> f64 {
        // compensated summation as an independent oracle
        let mut s = 0.0f64;
        let mut c = 0.0f64;
        for (i, w) in weights.iter().enumerate() {
            let y = w * grid.center(i) - c;
            let t = s + y;
            c = (t - s) - y;
            s = t;
        }
        s
    }

    proptest! {
        #[test]
        fn mean_matches_compensated_sum(lw in vec(-30.0f64..0.0, 40)) {
            let g = FrequencyGrid::new(-5e6, 5e6, 40).unwrap();
            let p = Posterior::from_log_weights(g, lw).unwrap();
            let oracle = sum_exact(p.weights(), &g);
            let scale = p.weights().iter().enumerate().map(|(i, w)| (w * g.center(i)).abs()).sum::<f64>();
            prop_assert!((p.estimate_mean() - oracle).abs() <= 1e-9 * scale.max(1.0));
        }

        #[test]
        fn normalization_holds_after_every_update(ls in vec(vec(-500.0f64..0.0, 32), 1..20)) {
            let mut p = Posterior::uniform(grid(32));
            for l in &ls {
                p.update(l).unwrap();
                prop_assert!(p.weights().iter().all(|&w| w >= 0.0));
                prop_assert!((p.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn update_order_does_not_matter(ls in vec(vec(-50.0f64..0.0, 24), 2..10), seed in any::<u64>()) {
            let mut forward = Posterior::uniform(grid(24));
            for l in &ls {
                forward.update(l).unwrap();
            }
            let mut order: Vec<usize> = (0..ls.len()).collect();
            // deterministic shuffle from the seed
            let mut s = seed;
            for i in (1..order.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                order.swap(i, (s >> 33) as usize % (i + 1));
            }
            let mut shuffled = Posterior::uniform(grid(24));
            for &i in &order {
                shuffled.update(&ls[i]).unwrap();
            }
            for (a, b) in forward.weights().iter().zip(shuffled.weights()) {
                prop_assert!((a - b).abs() <= 1e-10);
            }
        }

        #[test]
        fn peak_survives_monotone_rescaling(lw in vec(-20.0f64..0.0, 30), scale in 0.1f64..10.0, shift in -100.0f64..100.0) {
            let g = grid(30);
            let p = Posterior::from_log_weights(g, lw.clone()).unwrap();
            let q = Posterior::from_log_weights(g, lw.iter().map(|l| l * scale + shift).collect()).unwrap();
            prop_assert_eq!(p.peak_index(), q.peak_index());
        }
    }
}
