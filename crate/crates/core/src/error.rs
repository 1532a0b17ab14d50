use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid sensor model: {0}")]
    InvalidSensor(String),
    #[error("invalid measurement setting: {0}")]
    InvalidSetting(String),
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
    #[error("invalid batch outcome: {clicks} clicks out of {repetitions} repetitions")]
    InvalidOutcome { clicks: u64, repetitions: u64 },
    #[error("zero contrast sensor")]
    ZeroContrast,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("degenerate posterior")]
    DegeneratePosterior,
    #[error("empty input")]
    EmptyInput,
    #[error("schedule rejected: {0}")]
    InvalidSchedule(String),
    #[error("invalid operating point: Fisher denominator {0} is not positive")]
    InvalidOperatingPoint(f64),
    #[error("invalid config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
