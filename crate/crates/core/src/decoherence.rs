//! Loss calibration of Ω₁ and the black-body collective-decoherence budget.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::potential_numeric_at;
#[allow(unused_imports)]
use crate::math::*;
use crate::params::DressingParams;

/// Default survival probability that bounds the black-body budget.
pub const DEFAULT_SURVIVAL_THRESHOLD: f64 = 0.82;

/// Result of matching the per-atom loss at the trap centre to a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub omega1: f64,
    /// Interaction at the trap centre for the calibrated Ω₁.
    pub u0: f64,
    /// Numeric per-atom loss at the calibrated Ω₁.
    pub loss: f64,
    /// γₚU₀/Δ, the profile relation between loss and interaction.
    pub loss_shortcut: f64,
    pub iterations: usize,
}

/// Per-atom loss and interaction with both atoms at a node inside the soft core.
fn centre(params: &DressingParams, omega1: f64) -> Result<(f64, f64)> {
    let p = params.with_omega1(omega1);
    let n = potential_numeric_at(&p, p.omega2c, p.omega2c, p.v_max())?;
    Ok((n.loss, n.u))
}

/// Finds Ω₁ such that the numeric per-atom loss at the trap centre equals
/// `gamma_target`, by bisection in log Ω₁.
///
/// The bracket is seeded from the Ω₁⁴ scaling of the loss around
/// `params.omega1` and widened by factors of two.
pub fn calibrate_omega1(params: &DressingParams, gamma_target: f64) -> Result<Calibration> {
    if !(gamma_target.is_finite() && gamma_target > 0.0) {
        return Err(Error::invalid("gamma_target", format!("must be finite and > 0, got {gamma_target}")));
    }
    params.validate()?;

    let mut samples: Vec<(f64, f64)> = Vec::new();
    let eval = |w: f64, samples: &mut Vec<(f64, f64)>| -> Result<f64> {
        let (loss, _) = centre(params, w)?;
        samples.push((w, loss));
        Ok(loss)
    };

    let l0 = eval(params.omega1, &mut samples)?;
    if !(l0 > 0.0) {
        return Err(Error::BracketFailure { samples });
    }
    let guess = params.omega1 * (gamma_target / l0).powf(0.25);
    let (mut lo, mut hi) = (guess / 2.0, guess * 2.0);
    let mut f_lo = eval(lo, &mut samples)?;
    let mut f_hi = eval(hi, &mut samples)?;
    let mut widen = 0;
    while !(f_lo <= gamma_target && gamma_target <= f_hi) {
        if f_lo >= f_hi || widen >= 20 {
            return Err(Error::BracketFailure { samples });
        }
        if f_lo > gamma_target {
            lo /= 2.0;
            f_lo = eval(lo, &mut samples)?;
        } else {
            hi *= 2.0;
            f_hi = eval(hi, &mut samples)?;
        }
        widen += 1;
    }

    let mut iterations = 0;
    loop {
        iterations += 1;
        let mid = (lo * hi).sqrt();
        let f = eval(mid, &mut samples)?;
        if !(f_lo <= f && f <= f_hi) {
            return Err(Error::BracketFailure { samples });
        }
        if (f / gamma_target - 1.0).abs() < 1e-6 || iterations >= 200 {
            let (loss, u0) = centre(params, mid)?;
            return Ok(Calibration {
                omega1: mid,
                u0,
                loss,
                loss_shortcut: params.gamma_p * u0 / params.delta,
                iterations,
            });
        }
        if f < gamma_target {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
            f_hi = f;
        }
    }
}

/// One point of a calibration scan over Ω₂c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub omega2c: f64,
    pub delta: f64,
    pub calibration: Calibration,
}

/// Calibrates Ω₁ for each Ω₂c with the node resonance kept in place,
/// Δ = sign(Δ₀)·Ω₂c/2.
pub fn calibration_scan(params: &DressingParams, omega2c_values: &[f64], gamma_target: f64) -> Result<Vec<ScanPoint>> {
    let sign = params.delta.signum();
    omega2c_values
        .iter()
        .map(|&o| {
            let mut p = *params;
            p.omega2c = o;
            p.delta = sign * 0.5 * o;
            Ok(ScanPoint { omega2c: o, delta: p.delta, calibration: calibrate_omega1(&p, gamma_target)? })
        })
        .collect()
}

/// Tabulated black-body depopulation rates (temperature K, rate 1/s).
pub const BBR_TABLE: [(f64, f64); 3] = [(300.0, 1960.0), (77.0, 500.0), (3.0, 17.0)];

/// Black-body induced depopulation rate of the Rydberg level.
pub fn bbr_rate(temperature: f64) -> Result<f64> {
    BBR_TABLE
        .iter()
        .find(|(t, _)| *t == temperature)
        .map(|(_, g)| *g)
        .ok_or(Error::UnknownTemperature(temperature))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BbrBudget {
    pub temperature: f64,
    pub gamma_bbr: f64,
    /// Collective Rydberg population.
    pub p_r: f64,
    /// Longest time with survival above `threshold`.
    pub tau_max: f64,
    pub threshold: f64,
}

impl BbrBudget {
    /// exp(−Pᵣ Γ_BBR τ).
    pub fn survival(&self, tau: f64) -> f64 {
        (-self.p_r * self.gamma_bbr * tau).exp()
    }
}

/// Budget for a given collective population Pᵣ.
pub fn bbr_budget_from_population(p_r: f64, temperature: f64, threshold: f64) -> Result<BbrBudget> {
    if !(p_r.is_finite() && p_r > 0.0) {
        return Err(Error::invalid("p_r", format!("must be finite and > 0, got {p_r}")));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid("threshold", format!("must lie in (0, 1), got {threshold}")));
    }
    let gamma_bbr = bbr_rate(temperature)?;
    Ok(BbrBudget { temperature, gamma_bbr, p_r, tau_max: -threshold.ln() / (p_r * gamma_bbr), threshold })
}

/// Budget for `n_sites` dressed atoms, Pᵣ = N Ω₁²/Ω₂c².
pub fn bbr_budget(n_sites: u64, omega1: f64, omega2c: f64, temperature: f64, threshold: f64) -> Result<BbrBudget> {
    if n_sites < 1 {
        return Err(Error::invalid("n_sites", "must be at least 1"));
    }
    let r = omega1 / omega2c;
    bbr_budget_from_population(n_sites as f64 * r * r, temperature, threshold)
}
