//! Memory kernel W(omega) and the dressed cavity response t1.

use num_complex::Complex64 as C64;

use super::CavityModel;
use crate::error::{Error, Result};
use crate::spin_model::SpinDistribution;

const I: C64 = C64::new(0.0, 1.0);

/// `W(omega) = sum_j g_j^2 / (omega - omega_j + i gamma_0 / 2)` on the real axis.
///
/// With `gamma_0 = 0` the sum has real poles at the nodes; hitting one exactly
/// is an error rather than being regularized. Evaluate slightly off the node
/// (or in the upper half-plane through [`SpinKernel`]) instead.
pub fn memory_kernel(dist: &SpinDistribution, cavity: &CavityModel, omega: f64) -> Result<C64> {
    if cavity.gamma_0 == 0.0 && dist.nodes().iter().any(|n| n.omega == omega) {
        return Err(Error::PoleCollision { omega });
    }
    let g2 = dist.collective_coupling().powi(2);
    let shift = C64::new(omega, 0.5 * cavity.gamma_0);
    Ok(dist
        .nodes()
        .iter()
        .map(|n| g2 * n.weight / (shift - n.omega))
        .sum())
}

/// `t1(-i omega) = i / (omega - omega_c + i kappa/2 - W(omega))`.
pub fn cavity_amplitude_t1(dist: &SpinDistribution, cavity: &CavityModel, omega: f64) -> Result<C64> {
    cavity.require_dissipation()?;
    let w = memory_kernel(dist, cavity, omega)?;
    Ok(I / (C64::new(omega - cavity.omega_c, 0.5 * cavity.kappa) - w))
}

/// Kernel data shifted into the frame rotating at `omega_ref`, evaluated at
/// complex frequencies `z` (relative to `omega_ref`) in the upper half-plane.
#[derive(Debug, Clone)]
pub struct SpinKernel {
    pub(crate) omega_ref: f64,
    /// omega_j - omega_ref
    pub(crate) detunings: Vec<f64>,
    /// g_j^2
    pub(crate) g2: Vec<f64>,
    pub(crate) half_gamma: f64,
    pub(crate) half_kappa: f64,
    /// omega_c - omega_ref
    pub(crate) cavity_detuning: f64,
}

impl SpinKernel {
    pub fn new(dist: &SpinDistribution, cavity: &CavityModel, omega_ref: f64) -> Self {
        let g2 = dist.collective_coupling().powi(2);
        Self {
            omega_ref,
            detunings: dist.nodes().iter().map(|n| n.omega - omega_ref).collect(),
            g2: dist.nodes().iter().map(|n| g2 * n.weight).collect(),
            half_gamma: 0.5 * cavity.gamma_0,
            half_kappa: 0.5 * cavity.kappa,
            cavity_detuning: cavity.omega_c - omega_ref,
        }
    }

    /// `sum_j g_j^2 / (z - d_j)` without the spin damping shift.
    pub fn raw(&self, z: C64) -> C64 {
        self.detunings
            .iter()
            .zip(&self.g2)
            .map(|(&d, &g2)| g2 / (z - d))
            .sum()
    }

    /// W at relative complex frequency `z`.
    pub fn w(&self, z: C64) -> C64 {
        self.raw(z + I * self.half_gamma)
    }

    /// t1 at relative complex frequency `z`.
    pub fn t1(&self, z: C64) -> C64 {
        I / (z - self.cavity_detuning + I * self.half_kappa - self.w(z))
    }

    pub fn max_detuning(&self) -> f64 {
        self.detunings.iter().fold(0.0f64, |m, d| m.max(d.abs()))
    }
}
