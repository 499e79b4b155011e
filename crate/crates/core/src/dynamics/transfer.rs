//! Laplace-domain transfer amplitude `t_wp(-i omega)` for a pulse-excited
//! spin mode.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::kernel::cavity_amplitude_t1;
use super::pulse::{pulse_constant, PulseEnvelope};
use super::CavityModel;
use crate::error::{Error, Result};
use crate::spin_model::SpinDistribution;

const I: C64 = C64::new(0.0, 1.0);

/// How the excited spin mode enters the transfer amplitude.
///
/// `NarrowPulse` and `ExactConvolution` use the factorized form
/// `i g_K t1(omega) F(omega_p) / (omega - omega_p + i gamma_0/2)`, where the
/// pulse mode is treated as sitting at `omega_p`; they differ only in the
/// overlap factor `F`. `Resolvent` keeps every node at its own frequency,
/// `i t1(omega) sum_k c_k g_k / (omega - omega_k + i gamma_0/2)`, which is
/// exactly what the time-domain propagation computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralMode {
    #[default]
    NarrowPulse,
    ExactConvolution,
    Resolvent,
}

/// Normalized pulse-mode amplitudes `c_k = alpha(omega_k - omega_p) g_k / norm`.
pub fn pulse_mode_coefficients(
    dist: &SpinDistribution,
    env: &PulseEnvelope,
    omega_p: f64,
) -> Result<Vec<C64>> {
    env.validate()?;
    let g = dist.couplings();
    let mut c: Vec<C64> = dist
        .nodes()
        .iter()
        .zip(&g)
        .map(|(n, &gk)| env.amplitude(n.omega - omega_p) * gk)
        .collect();
    let norm = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::InvalidParameter {
            name: "omega_p",
            reason: "pulse excites no spins (zero coupling or overlap)".into(),
        });
    }
    for x in &mut c {
        *x /= norm;
    }
    Ok(c)
}

/// Overlap factor `F(omega_p)`.
///
/// Narrow pulse: `A sqrt(rho(omega_p))` with the analytic density rescaled
/// by the window integral, i.e. the same windowed density the nodes carry.
/// Exact convolution (and resolvent): the node quadrature of
/// `(alpha * rho)(omega_p) / sqrt((|alpha|^2 * rho)(omega_p))`.
pub fn envelope_factor(
    dist: &SpinDistribution,
    env: &PulseEnvelope,
    omega_p: f64,
    mode: SpectralMode,
) -> Result<C64> {
    env.validate()?;
    match mode {
        SpectralMode::NarrowPulse => {
            if !dist.has_continuum() {
                return Err(Error::NoContinuousDensity);
            }
            if let Some(w) = dist.narrowest_fwhm() {
                if env.bandwidth() > w / 5.0 {
                    log::warn!(
                        "narrow-pulse mode with pulse bandwidth {:.3e} > fwhm/5 = {:.3e}; use exact convolution",
                        env.bandwidth(),
                        w / 5.0
                    );
                }
            }
            let rho = dist.density_at(omega_p) / dist.raw_integral();
            Ok(C64::from(pulse_constant(env) * rho.sqrt()))
        }
        SpectralMode::ExactConvolution | SpectralMode::Resolvent => {
            let mut num = C64::new(0.0, 0.0);
            let mut den = 0.0;
            for n in dist.nodes() {
                let a = env.amplitude(n.omega - omega_p);
                num += a * n.weight;
                den += a.norm_sqr() * n.weight;
            }
            if !(den > 0.0) {
                return Ok(C64::new(0.0, 0.0));
            }
            // node weights already approximate rho(omega_j) d omega
            Ok(num / den.sqrt())
        }
    }
}

/// `t_wp(-i omega)` on the real frequency axis.
pub fn transfer_spectrum_t(
    dist: &SpinDistribution,
    cavity: &CavityModel,
    env: &PulseEnvelope,
    omega_p: f64,
    omega: f64,
    mode: SpectralMode,
) -> Result<C64> {
    let t1 = cavity_amplitude_t1(dist, cavity, omega)?;
    let half_gamma = 0.5 * cavity.gamma_0;
    match mode {
        SpectralMode::NarrowPulse | SpectralMode::ExactConvolution => {
            if half_gamma == 0.0 && omega == omega_p {
                return Err(Error::PoleCollision { omega });
            }
            let f = envelope_factor(dist, env, omega_p, mode)?;
            Ok(I * dist.collective_coupling() * t1 * f / C64::new(omega - omega_p, half_gamma))
        }
        SpectralMode::Resolvent => {
            let c = pulse_mode_coefficients(dist, env, omega_p)?;
            let g = dist.couplings();
            let sum: C64 = dist
                .nodes()
                .iter()
                .zip(c.iter().zip(&g))
                .map(|(n, (ck, gk))| ck * *gk / C64::new(omega - n.omega, half_gamma))
                .sum();
            Ok(I * t1 * sum)
        }
    }
}
