//! Qubit-detected electron spin resonance: a superconducting flux qubit
//! reads out a spin ensemble through a shared microwave cavity.
//!
//! * [`spin_model`] discretizes inhomogeneously broadened spin lines.
//! * [`dynamics`] computes the cavity amplitude after a spin or cavity
//!   excitation, by contour inversion or by direct ODE integration.
//! * [`protocol`] turns those amplitudes into qubit excitation
//!   probabilities: swap oscillations and ESR spectra.
//! * [`sensitivity`] estimates the smallest detectable ensemble in the
//!   dispersive, weak-coupling limit.

// `!(x > 0.0)` is used on purpose so NaN fails validation too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod exec;
pub mod presets;
pub mod protocol;
pub mod sensitivity;
pub mod spin_model;
pub mod units;

pub use error::{Error, Result};
pub use exec::Execution;
