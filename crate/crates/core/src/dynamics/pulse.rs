use std::f64::consts::{LN_2, PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    #[default]
    Lorentzian,
    Gaussian,
    Rectangular,
}

/// Spectral envelope alpha(omega - omega_p) of the spectroscopy pulse,
/// normalized to alpha(0) = 1.
///
/// * Lorentzian: `alpha(x) = 1 / (1 - 2 i x / fwhm)`, the spectrum of an
///   exponentially decaying drive; `|alpha|^2` is a Lorentzian of FWHM `fwhm`.
/// * Gaussian: `alpha(x) = exp(-2 ln2 x^2 / fwhm^2)`; `|alpha|^2` has FWHM `fwhm`.
/// * Rectangular: a square pulse of length `duration` centered on t = 0,
///   `alpha(x) = sin(x T / 2) / (x T / 2)`. `fwhm` is unused.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseEnvelope {
    pub shape: PulseShape,
    /// rad/s
    pub fwhm: f64,
    /// s
    pub duration: f64,
}

impl PulseEnvelope {
    pub fn lorentzian(fwhm: f64) -> Self {
        Self {
            shape: PulseShape::Lorentzian,
            fwhm,
            duration: 0.0,
        }
    }

    pub fn gaussian(fwhm: f64) -> Self {
        Self {
            shape: PulseShape::Gaussian,
            fwhm,
            duration: 0.0,
        }
    }

    pub fn rectangular(duration: f64) -> Self {
        Self {
            shape: PulseShape::Rectangular,
            fwhm: 0.0,
            duration,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.shape {
            PulseShape::Rectangular => {
                if !(self.duration > 0.0 && self.duration.is_finite()) {
                    return Err(Error::InvalidParameter {
                        name: "duration",
                        reason: format!("rectangular pulse needs duration > 0, got {}", self.duration),
                    });
                }
            }
            _ => {
                if !(self.fwhm > 0.0 && self.fwhm.is_finite()) {
                    return Err(Error::InvalidParameter {
                        name: "fwhm",
                        reason: format!("pulse bandwidth must be > 0, got {}", self.fwhm),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn amplitude(&self, x: f64) -> C64 {
        match self.shape {
            PulseShape::Lorentzian => C64::new(1.0, -2.0 * x / self.fwhm).inv(),
            PulseShape::Gaussian => C64::from((-2.0 * LN_2 * (x / self.fwhm).powi(2)).exp()),
            PulseShape::Rectangular => {
                let u = 0.5 * x * self.duration;
                if u.abs() < 1e-8 {
                    C64::from(1.0 - u * u / 6.0)
                } else {
                    C64::from(u.sin() / u)
                }
            }
        }
    }

    /// Full width at half maximum of `|alpha|^2`, rad/s.
    pub fn bandwidth(&self) -> f64 {
        match self.shape {
            PulseShape::Rectangular => 2.0 * 1.391_557_377_252_76 / (0.5 * self.duration),
            _ => self.fwhm,
        }
    }

    /// Detuning beyond which `|alpha|` is below `1e-16` of its peak, or
    /// `None` for envelopes with algebraic tails.
    pub(crate) fn support(&self) -> Option<f64> {
        match self.shape {
            // exp(-2 ln2 u^2) < 1e-16 for u > 4.59
            PulseShape::Gaussian => Some(4.6 * self.fwhm),
            _ => None,
        }
    }
}

/// `A = int alpha / sqrt(int |alpha|^2)`, the narrow-pulse envelope constant.
pub fn pulse_constant(env: &PulseEnvelope) -> f64 {
    match env.shape {
        PulseShape::Lorentzian => (PI * env.fwhm / 2.0).sqrt(),
        PulseShape::Gaussian => {
            let int_a = env.fwhm * (PI / (2.0 * LN_2)).sqrt();
            let int_a2 = env.fwhm * (PI / (4.0 * LN_2)).sqrt();
            int_a / int_a2.sqrt()
        }
        // both integrals equal 2 pi / T
        PulseShape::Rectangular => (TAU / env.duration).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lorentzian_constant() {
        let d = TAU * 150e3;
        let a = pulse_constant(&PulseEnvelope::lorentzian(d));
        assert!((a - (PI * d / 2.0).sqrt()).abs() / a < 1e-15);
    }

    #[test]
    fn envelopes_peak_at_one() {
        for env in [
            PulseEnvelope::lorentzian(1.0),
            PulseEnvelope::gaussian(1.0),
            PulseEnvelope::rectangular(1.0),
        ] {
            assert!((env.amplitude(0.0) - C64::from(1.0)).norm() < 1e-15);
            env.validate().unwrap();
        }
        assert!(PulseEnvelope::rectangular(0.0).validate().is_err());
        assert!(PulseEnvelope::gaussian(-1.0).validate().is_err());
    }

    #[test]
    fn power_spectrum_half_width() {
        let l = PulseEnvelope::lorentzian(2.0);
        assert!((l.amplitude(1.0).norm_sqr() - 0.5).abs() < 1e-15);
        let g = PulseEnvelope::gaussian(2.0);
        assert!((g.amplitude(1.0).norm_sqr() - 0.5).abs() < 1e-15);
        let r = PulseEnvelope::rectangular(1.0);
        let hw = 0.5 * r.bandwidth();
        assert!((r.amplitude(hw).norm_sqr() - 0.5).abs() < 1e-9);
    }
}
