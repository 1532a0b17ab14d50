use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform binning of the detuning axis. Bin `i` is centred at
/// `f_min + (i + 1/2) * width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    f_min: f64,
    f_max: f64,
    n_bins: usize,
}

impl FrequencyGrid {
    pub fn new(f_min: f64, f_max: f64, n_bins: usize) -> Result<Self> {
        if !(f_min.is_finite() && f_max.is_finite() && f_min < f_max) {
            return Err(Error::InvalidGrid(format!("need f_min < f_max, got [{f_min}, {f_max}]")));
        }
        if n_bins < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 bins, got {n_bins}")));
        }
        Ok(Self { f_min, f_max, n_bins })
    }

    /// The unambiguous range `[-1/(2 tau0), 1/(2 tau0)]` of the shortest
    /// sensing time, split into bins of `resolution` Hz.
    pub fn dynamic_range(tau0: f64, resolution: f64) -> Result<Self> {
        if !(tau0 > 0.0) {
            return Err(Error::InvalidGrid(format!("tau0 must be positive, got {tau0}")));
        }
        let half = 0.5 / tau0;
        Self::with_resolution(-half, half, resolution)
    }

    /// Bins of width `resolution`; the span must be an integer number of bins.
    pub fn with_resolution(f_min: f64, f_max: f64, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0) {
            return Err(Error::InvalidGrid(format!("resolution must be positive, got {resolution}")));
        }
        let count = (f_max - f_min) / resolution;
        let rounded = count.round();
        if (count - rounded).abs() > 1e-6 * rounded.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "resolution {resolution} Hz does not divide [{f_min}, {f_max}] evenly"
            )));
        }
        Self::new(f_min, f_max, rounded as usize)
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn bin_width(&self) -> f64 {
        (self.f_max - self.f_min) / self.n_bins as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.f_min + (i as f64 + 0.5) * self.bin_width()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_bins).map(|i| self.center(i)).collect()
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.f_min && f <= self.f_max
    }
}
