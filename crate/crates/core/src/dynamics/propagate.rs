//! Direct time-domain integration of `dX/dt = -i H_eff X`.
//!
//! `H_eff` only couples the cavity (index 0) to each spin node, so one
//! right-hand-side evaluation costs O(N). The integrator is an adaptive
//! Dormand-Prince 5(4) pair that lands exactly on every requested time.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::pulse::PulseEnvelope;
use super::transfer::pulse_mode_coefficients;
use super::{validate_times, CavityModel, Method, TransferResult};
use crate::error::{Error, Result};
use crate::spin_model::SpinDistribution;

/// Arrow-structured effective Hamiltonian, in the frame rotating at `omega_ref`.
#[derive(Debug, Clone)]
pub struct ArrowSystem {
    /// Complex diagonal: cavity first, then spin nodes.
    pub diag: Vec<C64>,
    /// `H[0][k] = i upper[k-1]`
    pub upper: Vec<f64>,
    /// `H[k][0] = -i lower[k-1]`
    pub lower: Vec<f64>,
}

impl ArrowSystem {
    pub fn new(dist: &SpinDistribution, cavity: &CavityModel, omega_ref: f64) -> Self {
        let mut diag = Vec::with_capacity(dist.len() + 1);
        diag.push(C64::new(cavity.omega_c - omega_ref, -0.5 * cavity.kappa));
        diag.extend(
            dist.nodes()
                .iter()
                .map(|n| C64::new(n.omega - omega_ref, -0.5 * cavity.gamma_0)),
        );
        let g = dist.couplings();
        Self {
            diag,
            upper: g.clone(),
            lower: g,
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `out = -i H x`
    pub fn rhs(&self, x: &[C64], out: &mut [C64]) {
        let x0 = x[0];
        let mut acc = C64::new(0.0, 0.0);
        for k in 1..x.len() {
            let (g_up, g_lo) = (self.upper[k - 1], self.lower[k - 1]);
            acc += x[k] * g_up;
            out[k] = mul_neg_i(self.diag[k] * x[k]) - x0 * g_lo;
        }
        out[0] = mul_neg_i(self.diag[0] * x0) + acc;
    }

    /// `out = (nu - i H) x`
    pub fn shifted_rhs(&self, nu: f64, x: &[C64], out: &mut [C64]) {
        self.rhs(x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o += xi * nu;
        }
    }

    /// `x_G^dagger (nu - i H)^n x0` for n = 0..=order.
    pub fn moments(&self, nu: f64, x0: &[C64], order: usize) -> Vec<C64> {
        let mut v = x0.to_vec();
        let mut next = vec![C64::new(0.0, 0.0); v.len()];
        let mut out = Vec::with_capacity(order + 1);
        out.push(v[0]);
        for _ in 0..order {
            self.shifted_rhs(nu, &v, &mut next);
            std::mem::swap(&mut v, &mut next);
            out.push(v[0]);
        }
        out
    }

    fn spectral_radius_bound(&self) -> f64 {
        let d = self.diag.iter().map(|d| d.norm()).fold(0.0, f64::max);
        let g = self.upper.iter().map(|g| g * g).sum::<f64>().sqrt();
        d + g
    }

    /// Integrates from `x0` at t = 0 and calls `visit(i, state)` at each of
    /// the (sorted, non-negative) `times`.
    pub fn propagate<F>(&self, x0: &[C64], times: &[f64], settings: &OdeSettings, mut visit: F) -> Result<()>
    where
        F: FnMut(usize, &[C64]),
    {
        let n = self.dim();
        let mut y = x0.to_vec();
        let mut t = 0.0;
        let mut h = (0.05 / self.spectral_radius_bound().max(1e-300)).min(
            times
                .iter()
                .cloned()
                .fold(0.0, f64::max)
                .max(f64::MIN_POSITIVE),
        );
        let mut k: [Vec<C64>; 7] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); n]);
        let mut tmp = vec![C64::new(0.0, 0.0); n];
        let mut y_new = vec![C64::new(0.0, 0.0); n];
        let mut steps = 0usize;
        self.rhs(&y, &mut k[0]);

        for (idx, &target) in times.iter().enumerate() {
            while t < target {
                let last = target - t <= h;
                let step = if last { target - t } else { h };
                for s in 1..6 {
                    for i in 0..n {
                        let mut acc = y[i];
                        for (j, a) in DP_A[s].iter().enumerate().take(s) {
                            if *a != 0.0 {
                                acc += k[j][i] * (step * a);
                            }
                        }
                        tmp[i] = acc;
                    }
                    self.rhs(&tmp, &mut k[s]);
                }
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, b) in DP_A[6].iter().enumerate() {
                        if *b != 0.0 {
                            acc += k[j][i] * (step * b);
                        }
                    }
                    y_new[i] = acc;
                }
                self.rhs(&y_new, &mut k[6]);
                let mut err = 0.0f64;
                for i in 0..n {
                    let mut e = C64::new(0.0, 0.0);
                    for (j, d) in DP_E.iter().enumerate() {
                        if *d != 0.0 {
                            e += k[j][i] * d;
                        }
                    }
                    let sc = settings.atol + settings.rtol * y[i].norm().max(y_new[i].norm());
                    err = err.max((e * step).norm() / sc);
                }
                steps += 1;
                if steps > settings.max_steps {
                    return Err(Error::StepSizeFailure { t, h: step });
                }
                if err <= 1.0 {
                    t = if last { target } else { t + step };
                    std::mem::swap(&mut y, &mut y_new);
                    k.swap(0, 6);
                }
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if err > 1.0 || !last {
                    h = step * factor;
                }
                if h < 1e-14 * target.max(1e-300) {
                    return Err(Error::StepSizeFailure { t, h });
                }
            }
            visit(idx, &y);
        }
        Ok(())
    }
}

#[inline]
fn mul_neg_i(z: C64) -> C64 {
    C64::new(z.im, -z.re)
}

// Dormand-Prince 5(4) tableau
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// b5 - b4
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Largest node count accepted (memory budget).
    pub max_nodes: usize,
    pub max_steps: usize,
}

impl Default for OdeSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_nodes: 2_000_000,
            max_steps: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// One photon in the cavity.
    CavityExcited,
    /// The collective spin mode excited by a weak pulse centered at `omega_p`.
    PulseExcited { omega_p: f64, envelope: PulseEnvelope },
}

/// Brute-force propagation of the cavity amplitude `<a(t) b^dagger(0)>` (or
/// `<a(t) a^dagger(0)>` for a cavity-excited start).
pub fn time_domain_propagate(
    dist: &SpinDistribution,
    cavity: &CavityModel,
    init: &InitialCondition,
    times: &[f64],
    settings: &OdeSettings,
) -> Result<TransferResult> {
    cavity.validate()?;
    validate_times(times)?;
    if dist.len() > settings.max_nodes {
        return Err(Error::TooLarge {
            nodes: dist.len(),
            budget: settings.max_nodes,
        });
    }
    let omega_ref = cavity.omega_c;
    let sys = ArrowSystem::new(dist, cavity, omega_ref);
    let mut x0 = vec![C64::new(0.0, 0.0); sys.dim()];
    let omega_p = match init {
        InitialCondition::CavityExcited => {
            x0[0] = C64::new(1.0, 0.0);
            None
        }
        InitialCondition::PulseExcited { omega_p, envelope } => {
            let c = pulse_mode_coefficients(dist, envelope, *omega_p)?;
            x0[1..].copy_from_slice(&c);
            Some(*omega_p)
        }
    };

    // integrate in time order, report in input order
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| times[i]).collect();
    let mut beta = vec![C64::new(0.0, 0.0); times.len()];
    sys.propagate(&x0, &sorted, settings, |i, y| beta[order[i]] = y[0])?;

    Ok(TransferResult {
        omega_p,
        times: times.to_vec(),
        beta,
        method: Method::TimeDomain,
        frame_omega: omega_ref,
    })
}
