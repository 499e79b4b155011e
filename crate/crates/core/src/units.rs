//! Frequency units.
//!
//! Configuration is written in cycles per second (Hz); every model quantity
//! is an angular frequency in rad/s, `omega = 2 pi f`.

use std::f64::consts::TAU;

pub fn hz_to_rad(hz: f64) -> f64 {
    TAU * hz
}

pub fn rad_to_hz(omega: f64) -> f64 {
    omega / TAU
}
