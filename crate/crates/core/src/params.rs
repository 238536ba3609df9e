//! Laser and atom parameters shared by every module.

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice::{Dimensionality, StandingWave};
#[allow(unused_imports)]
use crate::math::*;

/// Default cap on the van der Waals shift, in units of |Δ|.
pub const DEFAULT_V_MAX_FACTOR: f64 = 1e6;

/// Default threshold on Ω₁/Ω₂c and γₚ/|Δ| above which perturbative
/// results are flagged.
pub const DEFAULT_REGIME_THRESHOLD: f64 = 0.2;

/// Every laser and atom scalar of the dressing scheme.
///
/// Frequencies are angular (rad/s); `c6` is in rad/s·m⁶. The sign of
/// `delta` selects attractive (Δ < 0) or repulsive (Δ > 0) trap sites for
/// the `−Δ σₚₚ` sign convention of the single-atom Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressingParams {
    /// Lower-leg Rabi frequency Ω₁ (g ↔ p).
    pub omega1: f64,
    /// Standing-wave offset Ω₂c of the upper leg (p ↔ e).
    pub omega2c: f64,
    /// Standing-wave modulation amplitude Ω₂sw.
    pub omega2sw: f64,
    /// Intermediate-state detuning Δ.
    pub delta: f64,
    /// Decay rate of |p⟩.
    pub gamma_p: f64,
    /// Decay rate of the Rydberg state |e⟩; no default is shipped.
    pub gamma_e: f64,
    /// Van der Waals coefficient, user supplied.
    pub c6: Option<f64>,
    /// Upper-leg laser wavelength (m).
    pub wavelength: f64,
    /// Intersection angle of the two standing-wave beams (rad).
    pub theta: f64,
    /// Atomic mass (kg).
    pub mass: f64,
    /// Cap on C₆/r⁶ as a multiple of |Δ|.
    pub v_max_factor: f64,
    /// Threshold used by [`RegimeFlags`].
    pub regime_threshold: f64,
}

/// Perturbative-regime diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeFlags {
    /// Ω₁/Ω₂c; the closed forms assume this is small.
    pub dressing_ratio: f64,
    /// γₚ/|Δ|; the closed forms assume this is small.
    pub decay_ratio: f64,
    pub threshold: f64,
}

impl RegimeFlags {
    pub fn dressing_exceeded(&self) -> bool {
        self.dressing_ratio > self.threshold
    }

    pub fn decay_exceeded(&self) -> bool {
        self.decay_ratio > self.threshold
    }

    pub fn any_exceeded(&self) -> bool {
        self.dressing_exceeded() || self.decay_exceeded()
    }
}

impl DressingParams {
    /// Checks the physical invariants.
    pub fn validate(&self) -> Result<()> {
        let positive = |field, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(field, alloc::format!("must be finite and > 0, got {value}")))
            }
        };
        positive("omega1", self.omega1)?;
        positive("omega2c", self.omega2c)?;
        positive("gamma_p", self.gamma_p)?;
        positive("wavelength", self.wavelength)?;
        positive("mass", self.mass)?;
        positive("v_max_factor", self.v_max_factor)?;
        positive("regime_threshold", self.regime_threshold)?;
        if !(self.omega2sw.is_finite() && self.omega2sw >= 0.0) {
            return Err(Error::invalid("omega2sw", "must be finite and >= 0"));
        }
        if !(self.gamma_e.is_finite() && self.gamma_e >= 0.0) {
            return Err(Error::invalid("gamma_e", "must be finite and >= 0"));
        }
        if !self.delta.is_finite() || self.delta == 0.0 {
            return Err(Error::invalid("delta", "must be finite and nonzero"));
        }
        if !(self.theta > 0.0 && self.theta <= PI) {
            return Err(Error::invalid("theta", "must lie in (0, pi]"));
        }
        if let Some(c6) = self.c6 {
            positive("c6", c6)?;
        }
        Ok(())
    }

    pub fn regime_flags(&self) -> RegimeFlags {
        RegimeFlags {
            dressing_ratio: self.omega1 / self.omega2c,
            decay_ratio: self.gamma_p / self.delta.abs(),
            threshold: self.regime_threshold,
        }
    }

    /// Logs a warning when a perturbative assumption of `operation` is violated.
    pub fn warn_outside_regime(&self, operation: &str) -> RegimeFlags {
        let flags = self.regime_flags();
        if flags.dressing_exceeded() {
            log::warn!(
                "{operation}: Omega1/Omega2c = {:.3} exceeds {:.3}; weak-dressing result may be inaccurate",
                flags.dressing_ratio,
                flags.threshold
            );
        }
        if flags.decay_exceeded() {
            log::warn!(
                "{operation}: gamma_p/|Delta| = {:.3} exceeds {:.3}; narrow-line result may be inaccurate",
                flags.decay_ratio,
                flags.threshold
            );
        }
        flags
    }

    /// Laser wavevector k = 2π/λ.
    pub fn wavevector(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Projected wavevector k·sin(θ/2) of the standing wave.
    pub fn effective_wavevector(&self) -> f64 {
        self.wavevector() * (0.5 * self.theta).sin()
    }

    /// Interaction cap `v_max_factor · |Δ|` standing in for V → ∞.
    pub fn v_max(&self) -> f64 {
        self.v_max_factor * self.delta.abs()
    }

    /// Rydberg admixture Pᵣ = (Ω₁/Ω₂c)² of a dressed atom.
    pub fn rydberg_fraction(&self) -> f64 {
        let r = self.omega1 / self.omega2c;
        r * r
    }

    /// Two-photon Rabi frequency Ω₁Ω₂c/(2|Δ|) at a standing-wave node.
    pub fn two_photon_rabi(&self) -> f64 {
        self.omega1 * self.omega2c / (2.0 * self.delta.abs())
    }

    /// Capped interaction C₆/r⁶ at separation `r`.
    pub fn interaction_at(&self, r: f64) -> Result<f64> {
        let c6 = self.c6.ok_or(Error::MissingC6)?;
        let r = r.abs();
        if r == 0.0 {
            return Ok(self.v_max());
        }
        Ok((c6 / r.powi(6)).min(self.v_max()))
    }

    /// The upper-leg standing wave described by these parameters.
    pub fn standing_wave(&self, dims: Dimensionality) -> StandingWave {
        StandingWave {
            omega2c: self.omega2c,
            omega2sw: self.omega2sw,
            k: self.wavevector(),
            theta: self.theta,
            dims,
        }
    }

    pub fn with_omega1(mut self, omega1: f64) -> Self {
        self.omega1 = omega1;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }
}
