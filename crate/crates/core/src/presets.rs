//! Reference NV-ensemble scenarios: the `+I` and `+III` hyperfine triplets
//! seen by a 2.9 GHz cavity of quality factor 10^4.

use crate::dynamics::{CavityModel, PulseEnvelope};
use crate::error::Result;
use crate::spin_model::{build_distribution, GridSpec, LineShape, SpinDistribution, SpinLine};
use crate::units::hz_to_rad;

pub const HYPERFINE_SPLITTING_HZ: f64 = 2.2e6;
pub const PULSE_FWHM_HZ: f64 = 150e3;
pub const CAVITY_QUALITY: f64 = 1e4;
/// Line window in units of the line FWHM.
pub const WINDOW_FWHM: f64 = 8.0;
pub const DEFAULT_NODES: usize = 5_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripletPreset {
    pub name: &'static str,
    pub center_hz: f64,
    pub fwhm_hz: f64,
    pub coupling_hz: f64,
}

pub const PLUS_I: TripletPreset = TripletPreset {
    name: "+I",
    center_hz: 2.91e9,
    fwhm_hz: 1.6e6,
    coupling_hz: 2.9e6,
};

pub const PLUS_III: TripletPreset = TripletPreset {
    name: "+III",
    center_hz: 2.89e9,
    fwhm_hz: 2.4e6,
    coupling_hz: 3.8e6,
};

impl TripletPreset {
    pub fn omega_k(&self) -> f64 {
        hz_to_rad(self.center_hz)
    }

    /// Three equal Lorentzians split by the nitrogen hyperfine interaction.
    pub fn lines(&self) -> Vec<SpinLine> {
        [-1.0, 0.0, 1.0]
            .iter()
            .map(|k| {
                SpinLine::new(
                    hz_to_rad(self.center_hz + k * HYPERFINE_SPLITTING_HZ),
                    hz_to_rad(self.fwhm_hz),
                    1.0,
                )
            })
            .collect()
    }

    pub fn distribution(&self, n_nodes: usize) -> Result<SpinDistribution> {
        let lines = self.lines();
        let grid = GridSpec::covering(&lines, WINDOW_FWHM, n_nodes)?;
        build_distribution(&lines, hz_to_rad(self.coupling_hz), &[], grid, LineShape::Lorentzian)
    }

    /// Cavity tuned to the middle line.
    pub fn cavity(&self) -> CavityModel {
        CavityModel::from_quality(self.omega_k(), CAVITY_QUALITY)
    }

    pub fn pulse(&self) -> PulseEnvelope {
        PulseEnvelope::lorentzian(hz_to_rad(PULSE_FWHM_HZ))
    }
}
