//! Weak-coupling sensitivity of a qubit-detected spectrometer.
//!
//! After a hard pi/2 pulse the ensemble dipole decays as
//! `<S_-> = (N/2) exp(-Delta t)` and drives the cavity without back-action:
//! `d<a>/dt = -(kappa/2) <a> - i g <S_->`. The emitted field peaks at
//! roughly `n = g^2 N^2 / (4 Delta^2)` photons when `kappa << Delta`.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Electron gyromagnetic ratio for g = 2, Hz per mT, used to turn a
/// field linewidth into a dipole decay rate.
pub const LINEWIDTH_HZ_PER_MT: f64 = 28.0e6;

/// `Delta` in rad/s for a linewidth given in mT.
pub fn delta_from_linewidth(linewidth_mt: f64, hz_per_mt: f64) -> f64 {
    TAU * linewidth_mt * hz_per_mt
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakCouplingScenario {
    /// single-spin coupling, rad/s
    pub g: f64,
    pub n_spins: f64,
    /// decay rate of <S_->, rad/s
    pub delta: f64,
    /// cavity energy damping, rad/s
    pub kappa: f64,
    /// smallest detectable mean photon number
    pub n_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regime {
    /// `g sqrt(N) < kappa / 10`
    pub weak_coupling: bool,
    /// `kappa < Delta / 10`
    pub fast_dephasing: bool,
}

impl Regime {
    pub fn is_valid(&self) -> bool {
        self.weak_coupling && self.fast_dephasing
    }
}

impl WeakCouplingScenario {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("g", self.g),
            ("n_spins", self.n_spins),
            ("delta", self.delta),
            ("kappa", self.kappa),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite and >= 0, got {v}"),
                });
            }
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: "must be > 0".into(),
            });
        }
        if !(self.n_threshold > 0.0 && self.n_threshold.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "n_threshold",
                reason: format!("must be > 0, got {}", self.n_threshold),
            });
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        Regime {
            weak_coupling: self.g * self.n_spins.sqrt() < self.kappa / 10.0,
            fast_dephasing: self.kappa < self.delta / 10.0,
        }
    }

    /// Logs a warning outside `g sqrt(N) << kappa << Delta` and returns the
    /// regime flags.
    pub fn check_regime(&self) -> Regime {
        let r = self.regime();
        if !r.weak_coupling {
            log::warn!(
                "g sqrt(N) = {:.3e} rad/s is not below kappa/10 = {:.3e} rad/s",
                self.g * self.n_spins.sqrt(),
                self.kappa / 10.0
            );
        }
        if !r.fast_dephasing {
            log::warn!(
                "kappa = {:.3e} rad/s is not below Delta/10 = {:.3e} rad/s",
                self.kappa,
                self.delta / 10.0
            );
        }
        r
    }
}

/// `(1 - exp(-e t)) / e`, continuous through `e = 0`.
fn relaxed_window(e: f64, t: f64) -> f64 {
    let x = e * t;
    if x.abs() < 1e-6 {
        t * (1.0 - x / 2.0 + x * x / 6.0)
    } else {
        -(-x).exp_m1() / e
    }
}

/// Closed-form `<a>(t)` in the frame of the spin precession.
pub fn mean_field(s: &WeakCouplingScenario, t: f64) -> C64 {
    // e^{-kappa t/2} - e^{-Delta t} = e^{-kappa t/2} (1 - e^{-(Delta - kappa/2) t})
    let e = s.delta - 0.5 * s.kappa;
    let amp = 0.5 * s.g * s.n_spins * (-0.5 * s.kappa * t).exp() * relaxed_window(e, t);
    C64::new(0.0, -amp)
}

pub fn mean_field_trajectory(s: &WeakCouplingScenario, times: &[f64]) -> Vec<C64> {
    times.iter().map(|&t| mean_field(s, t)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonNumber {
    /// `g^2 N^2 / (4 Delta^2)`
    pub closed_form: f64,
    /// Maximum of `|<a>(t)|^2` found along the trajectory.
    pub trajectory_max: f64,
    pub t_peak: f64,
    pub regime: Regime,
}

pub fn closed_form_photon_number(g: f64, n_spins: f64, delta: f64) -> f64 {
    (g * n_spins / (2.0 * delta)).powi(2)
}

/// Peak intracavity photon number, closed form and trajectory maximum.
pub fn peak_photon_number(s: &WeakCouplingScenario) -> Result<PhotonNumber> {
    s.validate()?;
    let regime = s.check_regime();
    let f = |t: f64| mean_field(s, t).norm_sqr();
    // |<a>|^2 rises from 0 and is unimodal; bracket the peak by doubling
    let mut hi = 1.0 / s.delta;
    while f(2.0 * hi) > f(hi) && hi < 1e6 / s.delta {
        hi *= 2.0;
    }
    let (t_peak, trajectory_max) = golden_max(f, 0.0, 2.0 * hi);
    Ok(PhotonNumber {
        closed_form: closed_form_photon_number(s.g, s.n_spins, s.delta),
        trajectory_max,
        t_peak,
        regime,
    })
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (a.abs() + b.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

/// `N_min = (2 Delta / g) sqrt(n_threshold)`.
pub fn min_detectable_spins(g: f64, delta: f64, n_threshold: f64) -> Result<f64> {
    if !(g > 0.0 && delta > 0.0 && n_threshold > 0.0) {
        return Err(Error::InvalidParameter {
            name: "g",
            reason: format!("g, delta and n_threshold must be > 0, got {g}, {delta}, {n_threshold}"),
        });
    }
    Ok(2.0 * delta / g * n_threshold.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub g: f64,
    pub delta: f64,
    pub n_threshold: f64,
    pub n_min: f64,
}

/// `N_min` over the product grid, ordered g-major, then Delta, then threshold.
pub fn sensitivity_table(gs: &[f64], deltas: &[f64], thresholds: &[f64]) -> Result<Vec<SensitivityRow>> {
    let mut rows = Vec::with_capacity(gs.len() * deltas.len() * thresholds.len());
    for &g in gs {
        for &delta in deltas {
            for &n_threshold in thresholds {
                rows.push(SensitivityRow {
                    g,
                    delta,
                    n_threshold,
                    n_min: min_detectable_spins(g, delta, n_threshold)?,
                });
            }
        }
    }
    Ok(rows)
}

/// CSV with columns `g_hz,delta_hz,n_threshold,n_min`.
pub fn write_table_csv<W: Write>(rows: &[SensitivityRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["g_hz", "delta_hz", "n_threshold", "n_min"])?;
    for r in rows {
        w.serialize((r.g / TAU, r.delta / TAU, r.n_threshold, r.n_min))?;
    }
    w.flush()?;
    Ok(())
}
