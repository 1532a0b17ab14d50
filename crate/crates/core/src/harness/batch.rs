//! Many-detuning experiments and the error-vs-iteration tables built from them.

use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::harness::config::{ExperimentConfig, Method, Setup};
use crate::harness::run::{run_single, Trajectory};
use crate::posterior::rmse;
use crate::sim::{derive_seed, run_rng, GroundTruth};

/// Index reserved for the detuning draw, outside the range of cell indices.
const DETUNING_STREAM: u64 = u64::MAX;

/// How batch cells are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is on, otherwise sequential.
    #[default]
    Parallel,
}

/// One (detuning, method, batch size) estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub run_id: u64,
    pub detuning_index: usize,
    pub method: Method,
    pub repetitions: u64,
    pub truth: GroundTruth,
}

/// Error curve for one (method, batch size) pair at one iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MseRow {
    pub method: Method,
    pub repetitions: u64,
    pub iter: u32,
    /// Root of the mean squared error of the peak estimates (Hz).
    pub mse_hz: f64,
    pub mean_sense_time_s: f64,
    pub mean_total_time_s: f64,
    pub mean_shots: f64,
    /// Runs that had not yet finished at this iteration.
    pub active_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchResult {
    pub detunings: Vec<f64>,
    pub cells: Vec<Cell>,
    pub trajectories: Vec<Trajectory>,
    pub mse: Vec<MseRow>,
}

impl BatchResult {
    /// Curve for one (method, batch size) pair, ordered by iteration.
    pub fn curve(&self, method: Method, repetitions: u64) -> Vec<&MseRow> {
        self.mse
            .iter()
            .filter(|r| r.method == method && r.repetitions == repetitions)
            .collect()
    }

    pub fn final_mse(&self, method: Method, repetitions: u64) -> Option<f64> {
        self.curve(method, repetitions).last().map(|r| r.mse_hz)
    }
}

/// Uniform detunings over `range`, drawn from the master seed.
pub fn sample_detunings(master_seed: u64, n: usize, range: [f64; 2]) -> Vec<f64> {
    let mut rng = run_rng(master_seed, DETUNING_STREAM);
    let [lo, hi] = range;
    (0..n)
        .map(|_| if lo == hi { lo } else { rng.random_range(lo..hi) })
        .collect()
}

/// Enumerates cells detuning-major, then method, then batch size.
pub fn plan_cells(config: &ExperimentConfig, detunings: &[f64]) -> Vec<Cell> {
    let mut cells = Vec::with_capacity(detunings.len() * config.methods.len() * config.repetitions.len());
    for (d, &f_true) in detunings.iter().enumerate() {
        for &method in &config.methods {
            for &repetitions in &config.repetitions {
                let run_id = cells.len() as u64;
                cells.push(Cell {
                    run_id,
                    detuning_index: d,
                    method,
                    repetitions,
                    truth: GroundTruth {
                        f_true,
                        rng_seed: derive_seed(config.seed, run_id),
                    },
                });
            }
        }
    }
    cells
}

pub fn run_batch(config: &ExperimentConfig) -> Result<BatchResult> {
    run_batch_with(config, Execution::default())
}

pub fn run_batch_with(config: &ExperimentConfig, execution: Execution) -> Result<BatchResult> {
    let setup = config.setup_batch()?;
    let detunings = sample_detunings(config.seed, config.n_detunings, config.detuning_range);
    let cells = plan_cells(config, &detunings);
    let trajectories = run_cells(&setup, &cells, config.output.waterfall, execution)?;
    let mse = mse_table(config, &cells, &trajectories)?;
    Ok(BatchResult {
        detunings,
        cells,
        trajectories,
        mse,
    })
}

/// Runs every cell; results come back in cell order whatever the execution mode.
pub fn run_cells(setup: &Setup, cells: &[Cell], snapshots: bool, execution: Execution) -> Result<Vec<Trajectory>> {
    let one = |c: &Cell| run_single(setup, c.method, c.repetitions, c.truth, snapshots);
    match execution {
        Execution::Sequential => cells.iter().map(one).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            cells.par_iter().map(one).collect()
        }
        #[cfg(not(feature = "parallel"))]
        Execution::Parallel => cells.iter().map(one).collect(),
    }
}

fn mse_table(config: &ExperimentConfig, cells: &[Cell], trajectories: &[Trajectory]) -> Result<Vec<MseRow>> {
    let mut rows = Vec::new();
    for &method in &config.methods {
        for &repetitions in &config.repetitions {
            let group: Vec<&Trajectory> = cells
                .iter()
                .zip(trajectories)
                .filter(|(c, _)| c.method == method && c.repetitions == repetitions)
                .map(|(_, t)| t)
                .collect();
            rows.extend(mse_curve(method, repetitions, &group)?);
        }
    }
    Ok(rows)
}

/// Error curve across runs of one group, from the prior (iteration 0) to the
/// longest run. Finished runs contribute their final estimate.
pub fn mse_curve(method: Method, repetitions: u64, runs: &[&Trajectory]) -> Result<Vec<MseRow>> {
    let longest = runs.iter().map(|t| t.records.len()).max().unwrap_or(0);
    let truths: Vec<f64> = runs.iter().map(|t| t.truth.f_true).collect();
    let n = runs.len() as f64;
    let mut rows = Vec::with_capacity(longest + 1);
    for iter in 0..=longest {
        let estimates: Vec<f64> = runs.iter().map(|t| t.peak_at(iter)).collect();
        let (mut sense, mut total, mut shots) = (0.0, 0.0, 0.0);
        for t in runs {
            let (s, w, k) = t.times_at(iter);
            sense += s;
            total += w;
            shots += k as f64;
        }
        rows.push(MseRow {
            method,
            repetitions,
            iter: iter as u32,
            mse_hz: rmse(&estimates, &truths)?,
            mean_sense_time_s: sense / n,
            mean_total_time_s: total / n,
            mean_shots: shots / n,
            active_runs: runs.iter().filter(|t| t.records.len() >= iter).count(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::Strategy;
    use crate::harness::config::UpdateRule;

    fn small_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.n_detunings = 12;
        cfg.repetitions = vec![250, 1000];
        cfg.schedule.extended_iterations = 4;
        cfg.methods = vec![
            Method::new(UpdateRule::Majority, Strategy::Nonadaptive),
            Method::new(UpdateRule::Binomial, Strategy::AdaptiveOptimized),
        ];
        cfg
    }

    #[test]
    fn detunings_are_seeded_and_in_range() {
        let a = sample_detunings(5, 100, [-2e6, 2e6]);
        assert_eq!(a, sample_detunings(5, 100, [-2e6, 2e6]));
        assert!(a.iter().all(|f| (-2e6..2e6).contains(f)));
        assert_ne!(a, sample_detunings(6, 100, [-2e6, 2e6]));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let cfg = small_config();
        let a = run_batch_with(&cfg, Execution::Sequential).unwrap();
        let b = run_batch_with(&cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cells.len(), 12 * 2 * 2);
    }

    #[test]
    fn single_run_table_is_absolute_error() {
        let mut cfg = small_config();
        cfg.n_detunings = 1;
        cfg.repetitions = vec![500];
        cfg.methods = vec![Method::new(UpdateRule::Binomial, Strategy::Nonadaptive)];
        let res = run_batch(&cfg).unwrap();
        let t = &res.trajectories[0];
        let rows = res.curve(cfg.methods[0], 500);
        assert_eq!(rows.len(), t.records.len() + 1);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.mse_hz, (t.peak_at(i) - t.truth.f_true).abs());
        }
    }

    #[test]
    fn prior_row_is_constant_predictor() {
        let cfg = small_config();
        let res = run_batch(&cfg).unwrap();
        let setup = cfg.setup().unwrap();
        let lowest = setup.grid.center(0);
        let oracle = (res.detunings.iter().map(|f| (f - lowest).powi(2)).sum::<f64>()
            / res.detunings.len() as f64)
            .sqrt();
        for m in &cfg.methods {
            for &r in &cfg.repetitions {
                let row = res.curve(*m, r)[0];
                assert_eq!(row.iter, 0);
                assert!((row.mse_hz - oracle).abs() <= 1e-9 * oracle);
            }
        }
    }

    #[test]
    fn empty_lists_are_rejected() {
        let mut cfg = small_config();
        cfg.methods.clear();
        assert!(run_batch(&cfg).is_err());
        let mut cfg = small_config();
        cfg.repetitions.clear();
        assert!(run_batch(&cfg).is_err());
    }
}
