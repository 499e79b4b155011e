use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("spin distribution needs at least one line")]
    EmptyLines,
    #[error("line {index}: {field} must be positive (got {value})")]
    NonPositiveLine {
        index: usize,
        field: &'static str,
        value: f64,
    },
    #[error("grid needs at least 2 nodes (got {0})")]
    GridTooSmall(usize),
    #[error("invalid grid window: omega_min {min} must be below omega_max {max}")]
    InvalidWindow { min: f64, max: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("memory kernel evaluated exactly on a spin node at {omega} rad/s with no damping")]
    PoleCollision { omega: f64 },
    #[error("distribution has no continuous density; narrow-pulse mode needs line shapes")]
    NoContinuousDensity,
    #[error("integration window too small: |integrand| at edge is {ratio:.3e} of its peak")]
    WindowTooSmall { ratio: f64 },
    #[error("ODE step size underflow at t = {t} s (h = {h} s)")]
    StepSizeFailure { t: f64, h: f64 },
    #[error("problem size {nodes} exceeds the configured budget of {budget}")]
    TooLarge { nodes: usize, budget: usize },
    #[error("time grid too coarse: step {step} s exceeds {limit} s (10 points per oscillation period)")]
    GridTooCoarse { step: f64, limit: f64 },
    #[error("no swap oscillation detected (overdamped cavity population)")]
    NoOscillation,
    #[error("qubit saturation guard violated at omega_p = {omega_p} rad/s: {photons:.4} photons >= {guard}")]
    Saturation {
        omega_p: f64,
        photons: f64,
        guard: f64,
    },
    #[error("csv output failed: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
