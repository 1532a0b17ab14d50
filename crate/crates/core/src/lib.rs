//! Real-time Bayesian frequency estimation for a qubit sensor read out in
//! averaged batches rather than single shots.
//!
//! The detuning posterior lives on a fixed frequency grid. Each batch of
//! Ramsey shots updates it either through the binomial likelihood of the
//! raw click count or through the binary likelihood of a thresholded
//! (majority-vote) outcome. Sensing times grow exponentially, and the
//! readout phase follows a fixed ramp or a Fisher-information optimum.
//!
//! ```
//! use ramsey_bayes::harness::{run_single, ExperimentConfig, Method};
//! use ramsey_bayes::sim::GroundTruth;
//!
//! let mut config = ExperimentConfig::default();
//! config.schedule.extended_iterations = 0;
//! let setup = config.setup().unwrap();
//! let method: Method = "binomial_adaptive".parse().unwrap();
//! let truth = GroundTruth { f_true: 1.2e6, rng_seed: 7 };
//! let run = run_single(&setup, method, 2500, truth, false).unwrap();
//! assert_eq!(run.records.len(), 35);
//! ```

pub mod control;
pub mod error;
pub mod grid;
pub mod harness;
pub mod likelihood;
pub mod posterior;
pub mod schedule;
pub mod sensor;
pub mod sim;

pub use control::{fisher_information, optimal_phase, should_advance, Controller, PhaseHistory, Strategy};
pub use error::{Error, Result};
pub use grid::FrequencyGrid;
pub use likelihood::{BatchOutcome, SpinState};
pub use posterior::{rmse, Posterior};
pub use schedule::{Regime, Schedule};
pub use sensor::{MeasurementSetting, SensorModel};
pub use sim::{GroundTruth, TimeAccounting};
