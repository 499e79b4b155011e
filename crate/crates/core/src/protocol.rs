//! The two qubit-detected experiments: the single-photon swap oscillation
//! and the pulsed ESR spectrum.
//!
//! The qubit and the adiabatic cavity-qubit swap enter only as scalar
//! efficiencies, so every probability here is
//! `readout_fidelity * swap_efficiency * <photons in the cavity> + baseline`.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::{CavityModel, ContourSettings, ContourSolver, PulseEnvelope, SpectralMode};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::spin_model::SpinDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QubitChain {
    /// cavity -> qubit transfer
    pub swap_efficiency: f64,
    pub readout_fidelity: f64,
    /// Largest mean photon number allowed to reach the cavity.
    pub saturation_guard: f64,
    /// Additive dark-count probability.
    pub baseline: f64,
}

impl Default for QubitChain {
    fn default() -> Self {
        Self {
            swap_efficiency: 0.7,
            readout_fidelity: 0.7,
            saturation_guard: 1.0,
            baseline: 0.0,
        }
    }
}

impl QubitChain {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("swap_efficiency", self.swap_efficiency),
            ("readout_fidelity", self.readout_fidelity),
            ("saturation_guard", self.saturation_guard),
            ("baseline", self.baseline),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must lie in [0, 1], got {v}"),
                });
            }
        }
        if self.saturation_guard == 0.0 {
            return Err(Error::InvalidParameter {
                name: "saturation_guard",
                reason: "must be > 0".into(),
            });
        }
        Ok(())
    }

    /// Probability per photon in the cavity.
    pub fn gain(&self) -> f64 {
        self.readout_fidelity * self.swap_efficiency
    }

    fn probability(&self, photons: f64) -> f64 {
        (self.gain() * photons + self.baseline).clamp(0.0, 1.0)
    }
}

/// Local extremum refined by a parabola through the neighbouring samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub x: f64,
    pub y: f64,
}

/// Vertex of the parabola through three points; falls back to the middle
/// point when they are collinear or the vertex leaves the bracket.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Extremum {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curv = (d2 - d1) / (x[2] - x[0]);
    if curv == 0.0 || !curv.is_finite() {
        return Extremum { x: x[1], y: y[1] };
    }
    // Newton form y0 + d1 (t - x0) + curv (t - x0)(t - x1); zero derivative
    let xv = 0.5 * (x[0] + x[1]) - d1 / (2.0 * curv);
    if !(xv >= x[0] && xv <= x[2]) {
        return Extremum { x: x[1], y: y[1] };
    }
    let yv = y[0] + d1 * (xv - x[0]) + curv * (xv - x[0]) * (xv - x[1]);
    Extremum { x: xv, y: yv }
}

fn local_extrema(x: &[f64], y: &[f64], maxima: bool) -> Vec<Extremum> {
    let better = |a: f64, b: f64| if maxima { a > b } else { a < b };
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < y.len() {
        if !better(y[i], y[i - 1]) {
            i += 1;
            continue;
        }
        // a plateau counts once, at its midpoint
        let mut j = i;
        while j + 1 < y.len() && y[j + 1] == y[i] {
            j += 1;
        }
        if j + 1 < y.len() && better(y[i], y[j + 1]) {
            out.push(if j == i {
                parabola_vertex([x[i - 1], x[i], x[i + 1]], [y[i - 1], y[i], y[i + 1]])
            } else {
                Extremum {
                    x: 0.5 * (x[i] + x[j]),
                    y: y[i],
                }
            });
        }
        i = j + 1;
    }
    out
}

/// Interior local maxima of `y(x)` at least `min_fraction` of the global
/// maximum, in order of increasing `x`.
pub fn find_peaks(x: &[f64], y: &[f64], min_fraction: f64) -> Vec<Extremum> {
    let top = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    local_extrema(x, y, true)
        .into_iter()
        .filter(|e| e.y >= min_fraction * top)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapTrace {
    pub taus: Vec<f64>,
    pub p_e: Vec<f64>,
    /// |<a(tau) a^dagger(0)>|^2
    pub cavity_population: Vec<f64>,
    /// First minimum of the cavity population.
    pub tau_s: Option<f64>,
    /// First cavity maximum after `tau_s` (photon return).
    pub tau_return: Option<f64>,
    pub p_e_return: Option<f64>,
    /// Angular frequency of the population oscillation, `pi / (tau_return - tau_s)`.
    pub oscillation_frequency: Option<f64>,
}

impl SwapTrace {
    /// CSV with columns `tau_s,p_e,cavity_population`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tau_s", "p_e", "cavity_population"])?;
        for i in 0..self.taus.len() {
            w.serialize((self.taus[i], self.p_e[i], self.cavity_population[i]))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Swap oscillation after one photon is loaded into the cavity, which is
/// assumed already tuned to the ensemble.
///
/// A trace without any cavity minimum (decoupled or overdamped) is returned
/// with the fitted fields set to `None` and a warning is logged.
pub fn simulate_swap(
    dist: &SpinDistribution,
    cavity: &CavityModel,
    qubit: &QubitChain,
    taus: &[f64],
    settings: &ContourSettings,
    exec: Execution,
) -> Result<SwapTrace> {
    qubit.validate()?;
    check_resolution(dist, taus)?;
    let t_max = taus.iter().cloned().fold(0.0, f64::max);
    let solver = ContourSolver::new(dist, cavity, t_max, settings, exec)?;
    let pop = solver.cavity_response(taus)?.abs2();
    let p_e: Vec<f64> = pop.iter().map(|&n| qubit.probability(n)).collect();

    let minimum = first_minimum(taus, &pop);
    let ret = minimum.and_then(|m| {
        local_extrema(taus, &pop, true)
            .into_iter()
            .find(|e| e.x > m.x)
    });
    if minimum.is_none() {
        log::warn!("no swap oscillation in the trace (g_K = {:.3e} rad/s)", dist.collective_coupling());
    }
    Ok(SwapTrace {
        taus: taus.to_vec(),
        p_e,
        cavity_population: pop,
        tau_s: minimum.map(|m| m.x),
        tau_return: ret.map(|r| r.x),
        p_e_return: ret.map(|r| qubit.probability(r.y)),
        oscillation_frequency: match (minimum, ret) {
            (Some(m), Some(r)) => Some(PI / (r.x - m.x)),
            _ => None,
        },
    })
}

/// Variation below this fraction of the peak is contour round-off, not an
/// oscillation.
const FLAT_TOLERANCE: f64 = 1e-6;

fn first_minimum(taus: &[f64], pop: &[f64]) -> Option<Extremum> {
    let hi = pop.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = pop.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(hi - lo > FLAT_TOLERANCE * hi) {
        return None;
    }
    local_extrema(taus, pop, false).into_iter().next()
}

/// Requires at least 10 samples per population period `2 pi / (2 g_K)`.
fn check_resolution(dist: &SpinDistribution, taus: &[f64]) -> Result<()> {
    let g = dist.collective_coupling();
    if taus.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "taus",
            reason: "need at least two delays".into(),
        });
    }
    if g == 0.0 {
        return Ok(());
    }
    let limit = PI / g / 10.0;
    let step = taus
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);
    if step > limit {
        return Err(Error::GridTooCoarse { step, limit });
    }
    Ok(())
}

/// Samples per population period used by [`find_swap_time`].
const SWAP_SEARCH_DENSITY: usize = 400;

/// First time of maximal spin excitation: the first minimum of the cavity
/// population, searched over two vacuum-Rabi population periods.
pub fn find_swap_time(
    dist: &SpinDistribution,
    cavity: &CavityModel,
    settings: &ContourSettings,
    exec: Execution,
) -> Result<f64> {
    let g = dist.collective_coupling();
    if g == 0.0 {
        return Err(Error::NoOscillation);
    }
    let period = PI / g;
    let n = 2 * SWAP_SEARCH_DENSITY;
    let taus: Vec<f64> = (0..=n).map(|i| i as f64 * 2.0 * period / n as f64).collect();
    let solver = ContourSolver::new(dist, cavity, taus[n], settings, exec)?;
    let pop = solver.cavity_response(&taus)?.abs2();
    let coarse = first_minimum(&taus, &pop).ok_or(Error::NoOscillation)?;

    // re-sample the bracket finely before the parabolic step
    let h = 2.0 * period / n as f64;
    let fine: Vec<f64> = (0..=40).map(|i| coarse.x - h + i as f64 * h / 20.0).collect();
    let fine: Vec<f64> = fine.into_iter().filter(|&t| t >= 0.0).collect();
    let pop_fine = solver.cavity_response(&fine)?.abs2();
    Ok(local_extrema(&fine, &pop_fine, false)
        .into_iter()
        .next()
        .map_or(coarse.x, |e| e.x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub omega_p: Vec<f64>,
    pub p_e: Vec<f64>,
    /// `n_p |beta(omega_p, tau_s)|^2`
    pub n_transferred: Vec<f64>,
    pub tau_s: f64,
    /// Pump excitation `n_p` of the b_wp mode at each point.
    pub n_excitations_peak: f64,
    /// `readout_fidelity * swap_efficiency * n_p`
    pub scale: f64,
    pub mode: SpectralMode,
}

impl SpectrumResult {
    /// Peaks above 5% of the maximum.
    pub fn peaks(&self) -> Vec<Extremum> {
        find_peaks(&self.omega_p, &self.p_e, 0.05)
    }

    /// CSV with columns `omega_p_rad_per_s,p_e,n_transferred`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["omega_p_rad_per_s", "p_e", "n_transferred"])?;
        for i in 0..self.omega_p.len() {
            w.serialize((self.omega_p[i], self.p_e[i], self.n_transferred[i]))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `beta(omega_p, tau)` over a sweep, sharing the contour tables.
#[allow(clippy::too_many_arguments)]
fn transfer_at(
    dist: &SpinDistribution,
    cavity: &CavityModel,
    env: &PulseEnvelope,
    omegas: &[f64],
    tau: f64,
    mode: SpectralMode,
    settings: &ContourSettings,
    exec: Execution,
) -> Result<Vec<f64>> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "tau_s",
            reason: format!("must be > 0, got {tau}"),
        });
    }
    let solver = ContourSolver::new(dist, cavity, tau, settings, exec)?;
    let runs = solver.pulse_sweep(omegas, env, mode, &[tau])?;
    Ok(runs.iter().map(|r| r.beta[0].norm_sqr()).collect())
}

/// Qubit excitation probability after a weak pulse at each `omega_p`, a
/// free evolution of `tau_s`, and the cavity-qubit swap.
#[allow(clippy::too_many_arguments)]
pub fn esr_spectrum(
    dist: &SpinDistribution,
    cavity: &CavityModel,
    env: &PulseEnvelope,
    qubit: &QubitChain,
    omegas: &[f64],
    tau_s: f64,
    n_p: f64,
    mode: SpectralMode,
    settings: &ContourSettings,
    exec: Execution,
) -> Result<SpectrumResult> {
    qubit.validate()?;
    if !(n_p >= 0.0 && n_p.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "n_p",
            reason: format!("must be >= 0, got {n_p}"),
        });
    }
    let beta2 = transfer_at(dist, cavity, env, omegas, tau_s, mode, settings, exec)?;
    let n_transferred: Vec<f64> = beta2.iter().map(|b| n_p * b).collect();
    if let Some(i) = n_transferred
        .iter()
        .position(|&n| n >= qubit.saturation_guard)
    {
        return Err(Error::Saturation {
            omega_p: omegas[i],
            photons: n_transferred[i],
            guard: qubit.saturation_guard,
        });
    }
    Ok(SpectrumResult {
        omega_p: omegas.to_vec(),
        p_e: n_transferred.iter().map(|&n| qubit.probability(n)).collect(),
        n_transferred,
        tau_s,
        n_excitations_peak: n_p,
        scale: qubit.gain() * n_p,
        mode,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcitationBudget {
    /// Excitations put into the b_wp mode by the pulse.
    pub n_bp_mode: f64,
    /// Mean photon number reaching the cavity at `tau_s`.
    pub n_transferred: f64,
    /// `n_bp_mode / n_transferred = 1 / |beta|^2`
    pub ratio: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn excitation_budget(
    dist: &SpinDistribution,
    cavity: &CavityModel,
    env: &PulseEnvelope,
    n_p: f64,
    omega_p: f64,
    tau_s: f64,
    mode: SpectralMode,
    settings: &ContourSettings,
) -> Result<ExcitationBudget> {
    let beta2 = transfer_at(
        dist,
        cavity,
        env,
        &[omega_p],
        tau_s,
        mode,
        settings,
        Execution::Sequential,
    )?[0];
    Ok(ExcitationBudget {
        n_bp_mode: n_p,
        n_transferred: n_p * beta2,
        ratio: 1.0 / beta2,
    })
}
