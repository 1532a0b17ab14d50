//! JSON experiment configuration.
//!
//! Every key is optional; missing keys take the reference-experiment
//! defaults. Example:
//!
//! ```json
//! {
//!   "sensor": { "p_click_m0": 0.03419, "p_click_m1": 0.0251, "t2_star": 3.5e-6 },
//!   "grid": { "resolution_hz": 25000.0 },
//!   "schedule": { "tau0": 1e-7, "k_max": 4, "g": 3, "f": 2, "extended_iterations": 0 },
//!   "methods": ["majority_nonadaptive", "binomial_nonadaptive"],
//!   "repetitions": [2500],
//!   "n_detunings": 500,
//!   "detuning_range": [-2e6, 2e6],
//!   "seed": 1,
//!   "shot_overhead": 12e-6,
//!   "output": { "dir": "out", "waterfall": false }
//! }
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::control::Strategy;
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::schedule::Schedule;
use crate::sensor::SensorModel;
use crate::sim::DEFAULT_SHOT_OVERHEAD;

/// Likelihood used in the Bayesian update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    Majority,
    Binomial,
}

impl UpdateRule {
    pub fn name(self) -> &'static str {
        match self {
            UpdateRule::Majority => "majority",
            UpdateRule::Binomial => "binomial",
        }
    }
}

/// Update rule paired with a phase strategy, written `binomial_adaptive` etc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Method {
    pub update: UpdateRule,
    pub strategy: Strategy,
}

impl Method {
    pub const fn new(update: UpdateRule, strategy: Strategy) -> Self {
        Self { update, strategy }
    }

    pub fn all() -> Vec<Method> {
        let mut out = Vec::new();
        for update in [UpdateRule::Majority, UpdateRule::Binomial] {
            for strategy in [Strategy::Nonadaptive, Strategy::Adaptive, Strategy::AdaptiveOptimized] {
                out.push(Method::new(update, strategy));
            }
        }
        out
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.update.name(), self.strategy.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, tail) = s
            .split_once('_')
            .map(|(h, t)| (h, Some(t)))
            .unwrap_or((s, None));
        let update = match head {
            "majority" => UpdateRule::Majority,
            "binomial" => UpdateRule::Binomial,
            other => return Err(Error::Config(format!("unknown update rule '{other}' in method '{s}'"))),
        };
        let strategy = match tail {
            None | Some("nonadaptive") => Strategy::Nonadaptive,
            Some("adaptive") => Strategy::Adaptive,
            Some("adaptive_optimized") => Strategy::AdaptiveOptimized,
            Some(other) => {
                return Err(Error::Config(format!("unknown phase strategy '{other}' in method '{s}'")))
            }
        };
        Ok(Self { update, strategy })
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

/// Parses a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// Parses a comma-separated list of repetition counts.
pub fn parse_repetitions(list: &str) -> Result<Vec<u64>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|e| Error::Config(format!("bad repetition count '{s}': {e}")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub p_click_m0: f64,
    pub p_click_m1: f64,
    pub t2_star: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        let m = SensorModel::REFERENCE;
        Self {
            p_click_m0: m.p_click_m0(),
            p_click_m1: m.p_click_m1(),
            t2_star: m.t2_star(),
        }
    }
}

/// Grid bounds default to the dynamic range of `tau0`. Give either
/// `resolution_hz` or `n_bins`; `n_bins` wins when both are set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub f_min: Option<f64>,
    pub f_max: Option<f64>,
    pub resolution_hz: f64,
    pub n_bins: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            f_min: None,
            f_max: None,
            resolution_hz: 25e3,
            n_bins: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub tau0: f64,
    pub k_max: u32,
    pub g: u32,
    pub f: u32,
    pub extended_iterations: u32,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            tau0: 100e-9,
            k_max: 4,
            g: 3,
            f: 2,
            extended_iterations: 70,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write posterior snapshots to `waterfall.csv`.
    pub waterfall: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            waterfall: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sensor: SensorConfig,
    pub grid: GridConfig,
    pub schedule: ScheduleConfig,
    pub methods: Vec<Method>,
    pub repetitions: Vec<u64>,
    pub n_detunings: usize,
    pub detuning_range: [f64; 2],
    pub seed: u64,
    pub shot_overhead: f64,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sensor: SensorConfig::default(),
            grid: GridConfig::default(),
            schedule: ScheduleConfig::default(),
            methods: vec![
                Method::new(UpdateRule::Majority, Strategy::Nonadaptive),
                Method::new(UpdateRule::Binomial, Strategy::Nonadaptive),
            ],
            repetitions: vec![100, 250, 500, 750, 1000, 2500, 5000],
            n_detunings: 500,
            detuning_range: [-2e6, 2e6],
            seed: 1,
            shot_overhead: DEFAULT_SHOT_OVERHEAD,
            output: OutputConfig::default(),
        }
    }
}

/// Validated, ready-to-run pieces of a config.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub model: SensorModel,
    pub grid: FrequencyGrid,
    pub schedule: Schedule,
    pub shot_overhead: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    /// Checks everything a run needs and builds the model, grid and schedule.
    pub fn setup(&self) -> Result<Setup> {
        let s = &self.sensor;
        let model = SensorModel::new(s.p_click_m0, s.p_click_m1, s.t2_star)
            .map_err(|e| Error::Config(e.to_string()))?;
        let grid = self.build_grid().map_err(|e| Error::Config(e.to_string()))?;
        let c = &self.schedule;
        let schedule = Schedule::new(c.tau0, c.k_max, c.g, c.f, c.extended_iterations, &model)
            .map_err(|e| Error::Config(e.to_string()))?;
        if !(self.shot_overhead >= 0.0 && self.shot_overhead.is_finite()) {
            return Err(Error::Config(format!(
                "shot_overhead must be non-negative, got {}",
                self.shot_overhead
            )));
        }
        Ok(Setup {
            model,
            grid,
            schedule,
            shot_overhead: self.shot_overhead,
        })
    }

    /// `setup` plus the checks specific to batch experiments.
    pub fn setup_batch(&self) -> Result<Setup> {
        let setup = self.setup()?;
        if self.methods.is_empty() {
            return Err(Error::Config("method list is empty".into()));
        }
        if self.repetitions.is_empty() {
            return Err(Error::Config("repetition list is empty".into()));
        }
        if self.repetitions.contains(&0) {
            return Err(Error::Config("repetition counts must be >= 1".into()));
        }
        if self.n_detunings == 0 {
            return Err(Error::Config("n_detunings must be >= 1".into()));
        }
        let [lo, hi] = self.detuning_range;
        if !(lo <= hi && setup.grid.contains(lo) && setup.grid.contains(hi)) {
            return Err(Error::Config(format!(
                "detuning range [{lo}, {hi}] must be ordered and inside the grid [{}, {}]",
                setup.grid.f_min(),
                setup.grid.f_max()
            )));
        }
        Ok(setup)
    }

    fn build_grid(&self) -> Result<FrequencyGrid> {
        let half = 0.5 / self.schedule.tau0;
        let f_min = self.grid.f_min.unwrap_or(-half);
        let f_max = self.grid.f_max.unwrap_or(half);
        match self.grid.n_bins {
            Some(n) => FrequencyGrid::new(f_min, f_max, n),
            None => FrequencyGrid::with_resolution(f_min, f_max, self.grid.resolution_hz),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_the_reference_experiment() {
        let cfg = ExperimentConfig::default();
        let setup = cfg.setup_batch().unwrap();
        assert_eq!(setup.grid.n_bins(), 400);
        assert_eq!(setup.schedule.exponential_iterations(), 35);
        assert_eq!(setup.model, SensorModel::REFERENCE);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::all() {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert_eq!(
            "binomial".parse::<Method>().unwrap(),
            Method::new(UpdateRule::Binomial, Strategy::Nonadaptive)
        );
        assert!("bayes_adaptive".parse::<Method>().is_err());
        assert!("binomial_greedy".parse::<Method>().is_err());
    }

    #[test]
    fn json_partial_config() {
        let cfg = ExperimentConfig::from_json(
            r#"{"methods": ["binomial_adaptive"], "repetitions": [1000], "schedule": {"extended_iterations": 0}}"#,
        )
        .unwrap();
        assert_eq!(cfg.methods, vec![Method::new(UpdateRule::Binomial, Strategy::Adaptive)]);
        assert_eq!(cfg.schedule.extended_iterations, 0);
        assert_eq!(cfg.schedule.k_max, 4);
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.grid.resolution_hz = 30e3;
        assert!(cfg.setup().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.methods.clear();
        assert!(cfg.setup_batch().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.repetitions.clear();
        assert!(cfg.setup_batch().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.schedule.k_max = 6;
        assert!(cfg.setup().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.detuning_range = [-6e6, 0.0];
        assert!(cfg.setup_batch().is_err());
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_repetitions("100, 2500").unwrap(), vec![100, 2500]);
        assert!(parse_repetitions("10,x").is_err());
        assert_eq!(parse_methods("majority,binomial_adaptive").unwrap().len(), 2);
    }
}
