//! Laplace inversion on a shifted Bromwich line.
//!
//! The transform is sampled at `z_m = m dw + i c` (frequencies relative to
//! the frame), so every pole of the damped or undamped system lies below the
//! line and no real-axis regularization is needed. The large-`|z|` behaviour is
//! removed analytically before summation: with `s = -i z`,
//!
//! `L(s) = sum_n d_n / (s + nu)^(n+1)`, `d_n = x_G^dagger (nu - i H)^n x_0`,
//!
//! and the first terms of that series invert to `exp(-nu t) d_n t^n / n!`.
//! Only the fast-decaying remainder is summed numerically. Aliasing from the
//! implied period `T = 2 pi / dw` is suppressed by `exp(-c T)`.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::kernel::SpinKernel;
use super::propagate::{ArrowSystem, InitialCondition};
use super::pulse::{PulseEnvelope, PulseShape};
use super::transfer::{envelope_factor, pulse_mode_coefficients, SpectralMode};
use super::{validate_times, CavityModel, Method, TransferResult};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::spin_model::SpinDistribution;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContourSettings {
    /// `c t_max`
    pub shift: f64,
    /// `T / t_max`
    pub period: f64,
    /// Half-width of the frequency window in units of the spectral scale.
    pub window: f64,
    /// Number of analytically removed tail terms beyond the first.
    pub tail_order: usize,
    /// Largest accepted `|remainder at window edge| / max |transform|`.
    pub edge_tolerance: f64,
    pub max_points: usize,
}

impl Default for ContourSettings {
    fn default() -> Self {
        Self {
            shift: 3.0,
            period: 6.0,
            window: 60.0,
            tail_order: 3,
            edge_tolerance: 1e-4,
            max_points: 4_000_000,
        }
    }
}

impl ContourSettings {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be > 0, got {v}"),
                })
            }
        };
        check("shift", self.shift)?;
        check("period", self.period)?;
        check("window", self.window)?;
        check("edge_tolerance", self.edge_tolerance)?;
        if self.period <= 1.0 {
            return Err(Error::InvalidParameter {
                name: "period",
                reason: format!("must exceed 1 so the period covers t_max, got {}", self.period),
            });
        }
        Ok(())
    }
}

/// Sampling of the Bromwich line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourPlan {
    /// Imaginary offset `c`, rad/s.
    pub shift: f64,
    pub d_omega: f64,
    /// Points run over `m = -half_points ..= half_points`.
    pub half_points: usize,
    /// Tail pole location `s = -nu`, rad/s.
    pub nu: f64,
    pub t_max: f64,
}

impl ContourPlan {
    pub fn new(scale: f64, t_max: f64, settings: &ContourSettings) -> Result<Self> {
        settings.validate()?;
        if !(scale > 0.0 && scale.is_finite() && t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "t_max",
                reason: format!("need positive scale and horizon, got {scale}, {t_max}"),
            });
        }
        let d_omega = TAU / (settings.period * t_max);
        let half = (settings.window * scale / d_omega).ceil();
        let points = 2.0 * half + 1.0;
        if points > settings.max_points as f64 {
            return Err(Error::TooLarge {
                nodes: points.min(usize::MAX as f64) as usize,
                budget: settings.max_points,
            });
        }
        Ok(Self {
            shift: settings.shift / t_max,
            d_omega,
            half_points: half as usize,
            nu: scale,
            t_max,
        })
    }

    pub fn len(&self) -> usize {
        2 * self.half_points + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn z(&self, idx: usize) -> C64 {
        let m = idx as f64 - self.half_points as f64;
        C64::new(m * self.d_omega, self.shift)
    }

    /// `sum_n d_n / (s + nu)^(n+1)` at `z`.
    fn tail(&self, z: C64, moments: &[C64]) -> C64 {
        let inv = (-I * z + self.nu).inv();
        let mut p = inv;
        let mut acc = C64::new(0.0, 0.0);
        for d in moments {
            acc += d * p;
            p *= inv;
        }
        acc
    }
}

/// Contour data shared by every run on one distribution and cavity: the
/// kernel and `t1` tables on the line, and the cavity-start tail moments.
pub struct ContourSolver<'a> {
    dist: &'a SpinDistribution,
    kernel: SpinKernel,
    system: ArrowSystem,
    plan: ContourPlan,
    settings: ContourSettings,
    exec: Execution,
    w_tab: Vec<C64>,
    t1_tab: Vec<C64>,
    cavity_moments: Vec<C64>,
}

impl<'a> ContourSolver<'a> {
    /// `t_max` is the longest time that will be requested.
    pub fn new(
        dist: &'a SpinDistribution,
        cavity: &CavityModel,
        t_max: f64,
        settings: &ContourSettings,
        exec: Execution,
    ) -> Result<Self> {
        cavity.validate()?;
        let omega_ref = cavity.omega_c;
        let kernel = SpinKernel::new(dist, cavity, omega_ref);
        let rates = [
            kernel.max_detuning(),
            dist.collective_coupling(),
            cavity.kappa,
            cavity.gamma_0,
        ];
        let mut scale = rates.iter().cloned().fold(0.0, f64::max);
        let t_max = if t_max > 0.0 {
            t_max
        } else if scale > 0.0 {
            1.0 / scale
        } else {
            1.0
        };
        scale = scale.max(1.0 / t_max);
        let plan = ContourPlan::new(scale, t_max, settings)?;
        let system = ArrowSystem::new(dist, cavity, omega_ref);

        let zs: Vec<C64> = (0..plan.len()).map(|i| plan.z(i)).collect();
        let w_tab = exec.map(&zs, |&z| kernel.w(z));
        let t1_tab: Vec<C64> = zs
            .iter()
            .zip(&w_tab)
            .map(|(&z, &w)| I / (z - kernel.cavity_detuning + I * kernel.half_kappa - w))
            .collect();

        let mut e0 = vec![C64::new(0.0, 0.0); system.dim()];
        e0[0] = C64::new(1.0, 0.0);
        let cavity_moments = system.moments(plan.nu, &e0, settings.tail_order + 1);

        Ok(Self {
            dist,
            kernel,
            system,
            plan,
            settings: *settings,
            exec,
            w_tab,
            t1_tab,
            cavity_moments,
        })
    }

    pub fn plan(&self) -> &ContourPlan {
        &self.plan
    }

    pub fn frame_omega(&self) -> f64 {
        self.kernel.omega_ref
    }

    /// `<a(t) a^dagger(0)>`, the dressed cavity amplitude after one photon is
    /// put in the cavity.
    pub fn cavity_response(&self, times: &[f64]) -> Result<TransferResult> {
        self.check_horizon(times)?;
        let moments = &self.cavity_moments[..=self.settings.tail_order];
        let b = &self.t1_tab;
        let beta = self.invert(b, moments, times, self.exec)?;
        Ok(TransferResult {
            omega_p: None,
            times: times.to_vec(),
            beta,
            method: Method::Contour,
            frame_omega: self.frame_omega(),
        })
    }

    /// `<a(t) b_wp^dagger(0)>` for the spin mode prepared by a pulse at `omega_p`.
    pub fn pulse_response(
        &self,
        omega_p: f64,
        env: &PulseEnvelope,
        mode: SpectralMode,
        times: &[f64],
    ) -> Result<TransferResult> {
        self.check_horizon(times)?;
        self.pulse_response_with(omega_p, env, mode, times, self.exec)
    }

    fn pulse_response_with(
        &self,
        omega_p: f64,
        env: &PulseEnvelope,
        mode: SpectralMode,
        times: &[f64],
        exec: Execution,
    ) -> Result<TransferResult> {
        let (b, moments) = self.pulse_transform(omega_p, env, mode, exec)?;
        let beta = self.invert(&b, &moments, times, exec)?;
        Ok(TransferResult {
            omega_p: Some(omega_p),
            times: times.to_vec(),
            beta,
            method: Method::Contour,
            frame_omega: self.frame_omega(),
        })
    }

    /// `pulse_response` for each pulse center, computed in parallel when
    /// the executor allows it. Results are in input order.
    pub fn pulse_sweep(
        &self,
        omegas: &[f64],
        env: &PulseEnvelope,
        mode: SpectralMode,
        times: &[f64],
    ) -> Result<Vec<TransferResult>> {
        self.check_horizon(times)?;
        self.exec.try_map(omegas, |&w| {
            self.pulse_response_with(w, env, mode, times, Execution::Sequential)
        })
    }

    fn check_horizon(&self, times: &[f64]) -> Result<()> {
        let t_max = validate_times(times)?;
        if t_max > self.plan.t_max * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter {
                name: "times",
                reason: format!(
                    "time {t_max} s is beyond the planned horizon {} s",
                    self.plan.t_max
                ),
            });
        }
        Ok(())
    }

    /// Transform samples on the line and the matching tail moments.
    fn pulse_transform(
        &self,
        omega_p: f64,
        env: &PulseEnvelope,
        mode: SpectralMode,
        exec: Execution,
    ) -> Result<(Vec<C64>, Vec<C64>)> {
        let order = self.settings.tail_order;
        let p = omega_p - self.kernel.omega_ref;
        let half_gamma = self.kernel.half_gamma;
        match mode {
            SpectralMode::NarrowPulse | SpectralMode::ExactConvolution => {
                let f = envelope_factor(self.dist, env, omega_p, mode)?;
                let g = f * self.dist.collective_coupling();
                let pole = C64::new(p, -half_gamma);
                let b = (0..self.plan.len())
                    .map(|i| I * g * self.t1_tab[i] / (self.plan.z(i) - pole))
                    .collect();
                // product of the cavity series with 1/(s + i pole)
                let q = -I * pole + self.plan.nu;
                let moments = (0..=order)
                    .map(|n| {
                        (0..n)
                            .map(|k| self.cavity_moments[k] * q.powu((n - 1 - k) as u32))
                            .sum::<C64>()
                            * g
                    })
                    .collect();
                Ok((b, moments))
            }
            SpectralMode::Resolvent => {
                let c = pulse_mode_coefficients(self.dist, env, omega_p)?;
                let mut x0 = vec![C64::new(0.0, 0.0); self.system.dim()];
                x0[1..].copy_from_slice(&c);
                let moments = self.system.moments(self.plan.nu, &x0, order);
                let sums = self.resolvent_sums(&c, env, p, exec);
                let b = sums
                    .iter()
                    .zip(&self.t1_tab)
                    .map(|(s, t1)| I * t1 * s)
                    .collect();
                Ok((b, moments))
            }
        }
    }

    /// `sum_k c_k g_k / (z - d_k + i gamma_0/2)` on the line.
    fn resolvent_sums(&self, c: &[C64], env: &PulseEnvelope, p: f64, exec: Execution) -> Vec<C64> {
        let k = &self.kernel;
        let ig = I * k.half_gamma;
        if env.shape == PulseShape::Lorentzian {
            // c_k g_k = (i delta/2) g_k^2 / ((d_k - a) norm), a = p - i delta/2,
            // so the sum collapses onto W by partial fractions.
            let a = C64::new(p, -0.5 * env.fwhm);
            let norm = k
                .detunings
                .iter()
                .zip(&k.g2)
                .map(|(&d, &g2)| env.amplitude(d - p).norm_sqr() * g2)
                .sum::<f64>()
                .sqrt();
            let pre = I * (0.5 * env.fwhm) / norm;
            let w_a = k.raw(a);
            return (0..self.plan.len())
                .map(|i| {
                    let zp = self.plan.z(i) + ig;
                    pre / (zp - a) * (self.w_tab[i] - w_a)
                })
                .collect();
        }
        let support = env.support();
        let terms: Vec<(f64, C64)> = k
            .detunings
            .iter()
            .zip(c.iter().zip(&k.g2))
            .filter(|(d, _)| support.is_none_or(|s| (*d - p).abs() <= s))
            .map(|(&d, (ck, g2))| (d, ck * g2.sqrt()))
            .collect();
        exec.map_range(self.plan.len(), |i| {
            let zp = self.plan.z(i) + ig;
            terms.iter().map(|&(d, cg)| cg / (zp - d)).sum()
        })
    }

    fn invert(&self, b: &[C64], moments: &[C64], times: &[f64], exec: Execution) -> Result<Vec<C64>> {
        let plan = &self.plan;
        let resid: Vec<C64> = b
            .iter()
            .enumerate()
            .map(|(i, &bi)| bi - plan.tail(plan.z(i), moments))
            .collect();
        let peak = b.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if peak > 0.0 {
            let edge = resid[0].norm().max(resid[resid.len() - 1].norm());
            let ratio = edge / peak;
            if ratio > self.settings.edge_tolerance {
                return Err(Error::WindowTooSmall { ratio });
            }
        }
        let half = plan.half_points as f64;
        let pref = plan.d_omega / TAU;
        Ok(exec.map(times, |&t| {
            let step = C64::from_polar(1.0, -plan.d_omega * t);
            let mut ph = C64::from_polar(1.0, half * plan.d_omega * t);
            let mut acc = C64::new(0.0, 0.0);
            for (i, r) in resid.iter().enumerate() {
                // resync the phasor now and then to bound the drift
                if i % 256 == 0 {
                    ph = C64::from_polar(1.0, -(i as f64 - half) * plan.d_omega * t);
                }
                acc += r * ph;
                ph *= step;
            }
            let mut tail = C64::new(0.0, 0.0);
            let mut pow = 1.0;
            for (n, d) in moments.iter().enumerate() {
                if n > 0 {
                    pow *= t / n as f64;
                }
                tail += d * pow;
            }
            acc * (pref * (plan.shift * t).exp()) + tail * (-plan.nu * t).exp()
        }))
    }
}

/// Contour-inversion counterpart of [`time_domain_propagate`](super::time_domain_propagate).
pub fn invert_to_time(
    dist: &SpinDistribution,
    cavity: &CavityModel,
    init: &InitialCondition,
    mode: SpectralMode,
    times: &[f64],
    settings: &ContourSettings,
    exec: Execution,
) -> Result<TransferResult> {
    let t_max = validate_times(times)?;
    let solver = ContourSolver::new(dist, cavity, t_max, settings, exec)?;
    match init {
        InitialCondition::CavityExcited => solver.cavity_response(times),
        InitialCondition::PulseExcited { omega_p, envelope } => {
            solver.pulse_response(*omega_p, envelope, mode, times)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{time_domain_propagate, OdeSettings};
    use crate::spin_model::Node;

    fn two_spins() -> SpinDistribution {
        SpinDistribution::from_nodes(
            &[
                Node {
                    omega: 9.0,
                    weight: 0.3,
                },
                Node {
                    omega: 10.5,
                    weight: 0.7,
                },
            ],
            1.2,
        )
        .unwrap()
    }

    #[test]
    fn free_cavity_decay() {
        let d = SpinDistribution::from_nodes(&[Node { omega: 0.0, weight: 1.0 }], 0.0).unwrap();
        let cav = CavityModel::new(3.0, 0.8, 0.0);
        let times: Vec<f64> = (0..=50).map(|i| i as f64 * 0.2).collect();
        let r = invert_to_time(
            &d,
            &cav,
            &InitialCondition::CavityExcited,
            SpectralMode::Resolvent,
            &times,
            &ContourSettings::default(),
            Execution::Sequential,
        )
        .unwrap();
        for (t, b) in times.iter().zip(&r.beta) {
            assert!((b - C64::from((-0.4 * t).exp())).norm() < 1e-7, "t={t} {b}");
        }
    }

    #[test]
    fn undamped_rabi_needs_no_dissipation() {
        let d = SpinDistribution::from_nodes(&[Node { omega: 4.0, weight: 1.0 }], 0.9).unwrap();
        let cav = CavityModel::new(4.0, 0.0, 0.0);
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        let r = invert_to_time(
            &d,
            &cav,
            &InitialCondition::CavityExcited,
            SpectralMode::Resolvent,
            &times,
            &ContourSettings::default(),
            Execution::Parallel,
        )
        .unwrap();
        for (t, b) in times.iter().zip(&r.beta) {
            assert!((b - C64::from((0.9 * t).cos())).norm() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn resolvent_matches_ode_for_every_envelope() {
        let d = two_spins();
        let cav = CavityModel::new(10.0, 0.3, 0.05);
        let times: Vec<f64> = (0..=60).map(|i| i as f64 * 0.25).collect();
        for env in [
            PulseEnvelope::lorentzian(0.7),
            PulseEnvelope::gaussian(0.7),
            PulseEnvelope::rectangular(2.0),
        ] {
            let init = InitialCondition::PulseExcited {
                omega_p: 9.4,
                envelope: env,
            };
            let a = invert_to_time(
                &d,
                &cav,
                &init,
                SpectralMode::Resolvent,
                &times,
                &ContourSettings::default(),
                Execution::Sequential,
            )
            .unwrap();
            let b = time_domain_propagate(&d, &cav, &init, &times, &OdeSettings::default()).unwrap();
            let diff = a
                .beta
                .iter()
                .zip(&b.beta)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-6, "{:?}: {diff}", env.shape);
        }
    }

    #[test]
    fn beta_at_zero_is_initial_overlap() {
        let d = two_spins();
        let cav = CavityModel::new(10.0, 0.3, 0.0);
        let init = InitialCondition::PulseExcited {
            omega_p: 9.0,
            envelope: PulseEnvelope::lorentzian(0.5),
        };
        let r = invert_to_time(
            &d,
            &cav,
            &init,
            SpectralMode::Resolvent,
            &[0.0],
            &ContourSettings::default(),
            Execution::Sequential,
        )
        .unwrap();
        assert!(r.beta[0].norm() < 1e-7, "{}", r.beta[0]);
    }

    #[test]
    fn point_budget_guard() {
        let d = two_spins();
        let cav = CavityModel::new(10.0, 0.3, 0.0);
        let settings = ContourSettings {
            max_points: 10,
            ..Default::default()
        };
        let r = ContourSolver::new(&d, &cav, 100.0, &settings, Execution::Sequential);
        assert!(matches!(r, Err(Error::TooLarge { .. })));
    }

    #[test]
    fn horizon_enforced() {
        let d = two_spins();
        let cav = CavityModel::new(10.0, 0.3, 0.0);
        let s = ContourSolver::new(&d, &cav, 1.0, &ContourSettings::default(), Execution::Sequential).unwrap();
        assert!(s.cavity_response(&[2.0]).is_err());
    }
}
