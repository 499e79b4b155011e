//! Cavity + spin-ensemble dynamics in the single-excitation (linear) regime.
//!
//! The effective Hamiltonian is an arrow matrix: cavity mode first
//! (`omega_c - i kappa/2`), spin nodes on the diagonal (`omega_j - i gamma_0/2`),
//! and couplings `H[0][j] = i g_j`, `H[j][0] = -i g_j`. All correlation
//! functions are computed in the frame rotating at the cavity frequency
//! `omega_c`, so lab-frame amplitudes are `exp(-i omega_c t)` times the
//! returned values. With this sign convention a single resonant spin gives
//! `beta(t) = +sin(g t)`.
//!
//! Two independent routes evaluate the same amplitude: [`invert_to_time`]
//! inverts the Laplace-domain expression on a shifted Bromwich line, and
//! [`time_domain_propagate`] integrates the ODE directly.

mod contour;
mod kernel;
mod propagate;
mod pulse;
mod transfer;

use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use contour::{invert_to_time, ContourPlan, ContourSettings, ContourSolver};
pub use kernel::{cavity_amplitude_t1, memory_kernel, SpinKernel};
pub use propagate::{time_domain_propagate, ArrowSystem, InitialCondition, OdeSettings};
pub use pulse::{pulse_constant, PulseEnvelope, PulseShape};
pub use transfer::{envelope_factor, pulse_mode_coefficients, transfer_spectrum_t, SpectralMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityModel {
    /// rad/s
    pub omega_c: f64,
    /// energy damping rate, rad/s
    pub kappa: f64,
    /// single-spin spontaneous emission rate, rad/s
    pub gamma_0: f64,
}

impl CavityModel {
    pub fn new(omega_c: f64, kappa: f64, gamma_0: f64) -> Self {
        Self {
            omega_c,
            kappa,
            gamma_0,
        }
    }

    /// Cavity of quality factor `q`, `kappa = omega_c / q`, and no spin decay.
    pub fn from_quality(omega_c: f64, q: f64) -> Self {
        Self::new(omega_c, omega_c / q, 0.0)
    }

    pub fn tuned_to(&self, omega_c: f64) -> Self {
        Self { omega_c, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega_c.is_finite() {
            return Err(Error::InvalidParameter {
                name: "omega_c",
                reason: "must be finite".into(),
            });
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "kappa",
                reason: format!("must be >= 0, got {}", self.kappa),
            });
        }
        if !(self.gamma_0 >= 0.0 && self.gamma_0.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "gamma_0",
                reason: format!("must be >= 0, got {}", self.gamma_0),
            });
        }
        Ok(())
    }

    pub(crate) fn require_dissipation(&self) -> Result<()> {
        self.validate()?;
        if self.kappa > 0.0 || self.gamma_0 > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "kappa",
                reason: "real-axis evaluation needs kappa > 0 or gamma_0 > 0".into(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Contour,
    TimeDomain,
}

/// `beta(t)`: cavity amplitude at `t` for a unit excitation prepared at t = 0,
/// in the frame rotating at `frame_omega`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferResult {
    /// Pulse center for pulse-excited runs, `None` for a cavity-excited start.
    pub omega_p: Option<f64>,
    pub times: Vec<f64>,
    pub beta: Vec<C64>,
    pub method: Method,
    pub frame_omega: f64,
}

impl TransferResult {
    pub fn abs2(&self) -> Vec<f64> {
        self.beta.iter().map(|b| b.norm_sqr()).collect()
    }

    /// Largest pointwise difference of `|beta|` against another result on the
    /// same time grid.
    pub fn max_abs_difference(&self, other: &TransferResult) -> f64 {
        self.beta
            .iter()
            .zip(&other.beta)
            .map(|(a, b)| (a.norm() - b.norm()).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with columns `t_s,re_beta,im_beta,abs2_beta`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t_s", "re_beta", "im_beta", "abs2_beta"])?;
        for (t, b) in self.times.iter().zip(&self.beta) {
            w.serialize((t, b.re, b.im, b.norm_sqr()))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn validate_times(times: &[f64]) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::InvalidParameter {
            name: "times",
            reason: "time grid is empty".into(),
        });
    }
    let mut t_max = 0.0f64;
    for &t in times {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "times",
                reason: format!("times must be finite and >= 0, got {t}"),
            });
        }
        t_max = t_max.max(t);
    }
    Ok(t_max)
}
