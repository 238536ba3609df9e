//! Physical constants and the `/2π Hz` boundary conversions.
//!
//! Internally every frequency is an angular frequency (rad/s). Laboratory
//! numbers are quoted as `f/2π` in Hz; convert them once at the boundary.

use core::f64::consts::TAU;

/// Reduced Planck constant (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Unified atomic mass unit (kg).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Mass of a ⁸⁸Sr atom (kg).
pub const SR88_MASS: f64 = 87.905_612_5 * ATOMIC_MASS_UNIT;

/// Intermediate-state decay rate of the Sr 5s5p ³P₁ line, γₚ/2π = 7.6 kHz.
pub const SR_GAMMA_P_OVER_2PI_HZ: f64 = 7.6e3;

/// Converts a `/2π` frequency in Hz to rad/s.
#[inline]
pub fn hz_to_angular(hz: f64) -> f64 {
    TAU * hz
}

/// Converts rad/s to a `/2π` frequency in Hz.
#[inline]
pub fn angular_to_hz(rad_per_s: f64) -> f64 {
    rad_per_s / TAU
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let f = 7.6e3;
        assert!((angular_to_hz(hz_to_angular(f)) - f).abs() < 1e-9);
        assert!((hz_to_angular(1.0) - TAU).abs() < 1e-15);
    }
}
