#![allow(dead_code)]

use std::f64::consts::PI;

use rydlat_core::params::{DEFAULT_REGIME_THRESHOLD, DEFAULT_V_MAX_FACTOR};
use rydlat_core::units::{hz_to_angular, SR88_MASS};
use rydlat_core::DressingParams;

pub const TWO_PI: f64 = 2.0 * PI;

/// Node-resonant scenario: Ω₂c = 2Δ = 2π·10 MHz, Ω₂sw = Δ/2, θ = π, λ = 318 nm.
pub fn node_resonant() -> DressingParams {
    let delta = hz_to_angular(5e6);
    DressingParams {
        omega1: hz_to_angular(18.64e3),
        omega2c: 2.0 * delta,
        omega2sw: 0.5 * delta,
        delta,
        gamma_p: hz_to_angular(7.6e3),
        gamma_e: hz_to_angular(10.0),
        c6: None,
        wavelength: 318e-9,
        theta: PI,
        mass: SR88_MASS,
        v_max_factor: DEFAULT_V_MAX_FACTOR,
        regime_threshold: DEFAULT_REGIME_THRESHOLD,
    }
}

/// Dimensionless parameters in units of γₚ, for generic-regime checks.
pub fn unit_params(omega1: f64, omega2c: f64, delta: f64, gamma_e: f64) -> DressingParams {
    DressingParams {
        omega1,
        omega2c,
        omega2sw: 0.0,
        delta,
        gamma_p: 1.0,
        gamma_e,
        c6: None,
        wavelength: 1.0,
        theta: PI,
        mass: 1.0,
        v_max_factor: DEFAULT_V_MAX_FACTOR,
        regime_threshold: DEFAULT_REGIME_THRESHOLD,
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
