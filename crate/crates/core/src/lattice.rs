//! Standing-wave profile, effective two-atom interaction and lattice figures.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fit::levenberg_marquardt;
#[allow(unused_imports)]
use crate::math::*;
use crate::params::DressingParams;
use crate::quantum::{self, DensityMatrix, Operator, E, P};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimensionality {
    One,
    Three,
}

impl Dimensionality {
    pub fn from_count(d: u8) -> Option<Self> {
        match d {
            1 => Some(Self::One),
            3 => Some(Self::Three),
            _ => None,
        }
    }

    pub fn count(self) -> u8 {
        match self {
            Self::One => 1,
            Self::Three => 3,
        }
    }
}

/// Spatial profile of the upper-leg Rabi frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandingWave {
    pub omega2c: f64,
    pub omega2sw: f64,
    /// Laser wavevector 2π/λ.
    pub k: f64,
    pub theta: f64,
    pub dims: Dimensionality,
}

impl StandingWave {
    /// Wavevector projected on the lattice axis, k·sin(θ/2).
    pub fn effective_k(&self) -> f64 {
        self.k * (0.5 * self.theta).sin()
    }

    /// Node spacing π/(k·sin(θ/2)) of the 1D profile.
    pub fn period(&self) -> f64 {
        PI / self.effective_k()
    }

    /// Position of the `j`-th node.
    pub fn node(&self, j: i64) -> f64 {
        j as f64 * self.period()
    }

    /// Ω₂c + Ω₂sw·|sin(k x sin(θ/2))|.
    pub fn rabi(&self, x: f64) -> f64 {
        self.omega2c + self.omega2sw * (self.effective_k() * x).sin().abs()
    }

    /// Ω₂c + Ω₂sw·|sin(kx) sin(ky) sin(kz)|; θ does not enter the 3D pattern.
    pub fn rabi_3d(&self, r: [f64; 3]) -> f64 {
        let s = (self.k * r[0]).sin() * (self.k * r[1]).sin() * (self.k * r[2]).sin();
        self.omega2c + self.omega2sw * s.abs()
    }

    /// Axis over `[-period/2, period/2]` around node 0 with `n` uniform
    /// points, plus `oversample`-times denser points within `±halfwidth`
    /// of the node. Sorted and deduplicated.
    pub fn refined_axis(&self, n: usize, oversample: usize, halfwidth: f64) -> Vec<f64> {
        let half = 0.5 * self.period();
        let mut xs = linspace(-half, half, n);
        if n > 1 && oversample > 1 && halfwidth > 0.0 {
            let dx = 2.0 * half / (n - 1) as f64 / oversample as f64;
            let m = (halfwidth / dx).floor() as i64;
            xs.extend((-m..=m).map(|i| i as f64 * dx));
        }
        xs.sort_by(f64::total_cmp);
        xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * half);
        xs
    }
}

/// Rabi frequency of `sw` at 1D position `x`.
pub fn rabi_profile(sw: &StandingWave, x: f64) -> f64 {
    sw.rabi(x)
}

/// Output of one steady-state interaction evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericPotential {
    /// Per-atom interaction: half the pair-energy shift.
    pub u: f64,
    /// Pair-energy shift `Tr[ρ̄ H](v) − Tr[ρ̄ H](0)`.
    pub pair_energy: f64,
    /// Per-atom loss rate at `v`.
    pub loss: f64,
    /// Per-atom loss rate of the non-interacting pair.
    pub loss_baseline: f64,
    pub rho: DensityMatrix,
}

fn pair_energy(params: &DressingParams, o1: f64, o2: f64, v: f64) -> Result<(f64, DensityMatrix)> {
    let h = quantum::pair_hamiltonian(params, o1, o2, v);
    let l = quantum::liouvillian(&h, params)?;
    let rho = quantum::steady_state(&l)?;
    Ok((quantum::expectation(&rho, &h)?.re, rho))
}

/// Steady-state interaction for local Rabi frequencies `o1`, `o2` and
/// interaction shift `v`, relative to the non-interacting pair.
pub fn potential_numeric_at(params: &DressingParams, o1: f64, o2: f64, v: f64) -> Result<NumericPotential> {
    let (e_v, rho) = pair_energy(params, o1, o2, v)?;
    let (e_0, rho0) = pair_energy(params, o1, o2, 0.0)?;
    let pair = e_v - e_0;
    Ok(NumericPotential {
        u: 0.5 * pair,
        pair_energy: pair,
        loss: loss_rate(params, &rho)?,
        loss_baseline: loss_rate(params, &rho0)?,
        rho,
    })
}

/// Steady-state interaction of atoms at `x1`, `x2` on `sw`, with the
/// van der Waals shift C₆/|x₁−x₂|⁶ capped at `v_max`.
pub fn potential_numeric(params: &DressingParams, x1: f64, x2: f64, sw: &StandingWave) -> Result<NumericPotential> {
    let v = params.interaction_at(x1 - x2)?;
    potential_numeric_at(params, sw.rabi(x1), sw.rabi(x2), v)
}

/// Closed-form interaction inside the soft core.
pub fn potential_analytic(params: &DressingParams, omega2_x1: f64, omega2_x2: f64) -> f64 {
    let d = params.delta;
    let a = omega2_x1 * omega2_x1;
    let b = omega2_x2 * omega2_x2;
    let s = a + b;
    let d8 = 8.0 * d * d;
    let w4 = params.omega1.powi(4);
    let num = (d8 * s - (a - b) * (a - b)) * (s + d8);
    let den = (s - d8) * (s - d8) + 64.0 * params.gamma_p * params.gamma_p * d * d;
    w4 / (4.0 * a * b * d) * num / den
}

/// Width and depth of the Lorentzian trap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianParams {
    /// Half-width at half-maximum (m).
    pub w: f64,
    /// Depth Ω₁⁴/(8Δγₚ²) of the Lorentzian trap model.
    pub u0: f64,
    /// Closed-form interaction at the symmetric resonance, Ω₁⁴/(4Δγₚ²).
    pub u0_closed_form: f64,
    /// k·sin(θ/2)·w; the Lorentzian form assumes this is small.
    pub kw: f64,
}

pub fn lorentzian_params(params: &DressingParams, sw: &StandingWave) -> LorentzianParams {
    let kx = sw.effective_k();
    let w = 2.0 * params.gamma_p / (kx * sw.omega2sw);
    let g2 = params.gamma_p * params.gamma_p;
    let w4 = params.omega1.powi(4);
    let kw = kx * w;
    if kw > params.regime_threshold {
        log::warn!("lorentzian_params: k*w = {kw:.3} is not small; Lorentzian trap model may be inaccurate");
    }
    LorentzianParams {
        w,
        u0: w4 / (8.0 * params.delta * g2),
        u0_closed_form: w4 / (4.0 * params.delta * g2),
        kw,
    }
}

/// u0 / (1 + (x − xj)²/w²).
pub fn lorentzian_profile(u0: f64, w: f64, xj: f64, x: f64) -> f64 {
    let t = (x - xj) / w;
    u0 / (1.0 + t * t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianFit {
    pub u0: f64,
    pub w: f64,
    pub x0: f64,
    pub rms: f64,
}

pub const MIN_FIT_SAMPLES: usize = 7;

/// Least-squares Lorentzian fit to `(x, U)` samples.
///
/// Starts from the largest-magnitude sample as the centre and the nearest
/// half-maximum crossing as the width.
pub fn fit_lorentzian(samples: &[(f64, f64)]) -> Result<LorentzianFit> {
    let n = samples.len();
    if n < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples { found: n, required: MIN_FIT_SAMPLES });
    }
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ipk = (0..n).max_by(|&i, &j| s[i].1.abs().total_cmp(&s[j].1.abs())).unwrap_or(0);
    let (x0, u0) = s[ipk];
    let peak = u0.abs();
    let spread = s.iter().map(|p| (p.1 - u0).abs()).fold(0.0, f64::max);
    if peak == 0.0 || spread <= 1e-12 * peak {
        return Err(Error::FitDiverged { rms: 0.0, peak });
    }

    let crossing = |range: &mut dyn Iterator<Item = usize>| {
        let mut prev = ipk;
        for i in range {
            let (x, y) = s[i];
            if (y / u0) <= 0.5 {
                let (xp, yp) = s[prev];
                let t = (yp / u0 - 0.5) / (yp / u0 - y / u0);
                return Some((xp + t * (x - xp) - x0).abs());
            }
            prev = i;
        }
        None
    };
    let right = crossing(&mut (ipk + 1..n));
    let left = crossing(&mut (0..ipk).rev());
    let w0 = match (left, right) {
        (Some(l), Some(r)) => 0.5 * (l + r),
        (Some(h), None) | (None, Some(h)) => h,
        (None, None) => return Err(Error::FitDiverged { rms: spread, peak }),
    };
    if !(w0 > 0.0) {
        return Err(Error::FitDiverged { rms: spread, peak });
    }

    // Fit in units of the initial guesses.
    let xs: Vec<f64> = s.iter().map(|p| (p.0 - x0) / w0).collect();
    let ys: Vec<f64> = s.iter().map(|p| p.1 / u0).collect();
    let sol = levenberg_marquardt(
        |p, r| {
            for i in 0..xs.len() {
                let t = (xs[i] - p[2]) / p[1];
                r[i] = p[0] / (1.0 + t * t) - ys[i];
            }
        },
        &[1.0, 1.0, 0.0],
        &[1.0, 1.0, 1.0],
        n,
        500,
    );
    let rms = (sol.cost / n as f64).sqrt() * peak;
    let fit = LorentzianFit {
        u0: sol.params[0] * u0,
        w: sol.params[1].abs() * w0,
        x0: x0 + sol.params[2] * w0,
        rms,
    };
    if !(rms.is_finite() && rms <= 0.2 * peak && fit.w.is_finite()) {
        return Err(Error::FitDiverged { rms, peak });
    }
    Ok(fit)
}

/// Real values on a rectangular grid; `values[(i, j)]` sits at `(axis1[i], axis2[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSurface {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    pub values: DMatrix<f64>,
    /// Parameters the surface was computed from, when any.
    pub params: Option<DressingParams>,
}

impl PotentialSurface {
    pub fn from_fn(axis1: &[f64], axis2: &[f64], params: Option<DressingParams>, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = DMatrix::from_fn(axis1.len(), axis2.len(), |i, j| f(axis1[i], axis2[j]));
        Self { axis1: axis1.to_vec(), axis2: axis2.to_vec(), values, params }
    }

    pub fn try_from_fn(
        axis1: &[f64],
        axis2: &[f64],
        params: Option<DressingParams>,
        mut f: impl FnMut(f64, f64) -> Result<f64>,
    ) -> Result<Self> {
        let mut values = DMatrix::zeros(axis1.len(), axis2.len());
        for (i, &x1) in axis1.iter().enumerate() {
            for (j, &x2) in axis2.iter().enumerate() {
                values[(i, j)] = f(x1, x2)?;
            }
        }
        Ok(Self { axis1: axis1.to_vec(), axis2: axis2.to_vec(), values, params })
    }

    /// Largest deviation of `values` from its transpose, when the axes agree.
    pub fn swap_asymmetry(&self) -> Option<f64> {
        if self.axis1 != self.axis2 {
            return None;
        }
        Some((&self.values - self.values.transpose()).abs().max())
    }

    /// Grid spacings, assuming uniform axes.
    pub fn spacing(&self) -> (f64, f64) {
        let d = |a: &[f64]| if a.len() > 1 { (a[a.len() - 1] - a[0]) / (a.len() - 1) as f64 } else { 0.0 };
        (d(&self.axis1), d(&self.axis2))
    }

    /// Grid index and value of the largest `|U|`.
    pub fn dominant_extremum(&self) -> ((usize, usize), f64) {
        let mut best = ((0, 0), 0.0f64);
        for j in 0..self.values.ncols() {
            for i in 0..self.values.nrows() {
                let v = self.values[(i, j)];
                if v.abs() > best.1.abs() {
                    best = ((i, j), v);
                }
            }
        }
        best
    }

    /// True when the dominant extremum is a well (negative).
    pub fn is_attractive(&self) -> bool {
        self.dominant_extremum().1 < 0.0
    }
}

/// Closed-form surface U(x₁, x₂) on `sw`.
pub fn analytic_surface(params: &DressingParams, sw: &StandingWave, axis1: &[f64], axis2: &[f64]) -> PotentialSurface {
    PotentialSurface::from_fn(axis1, axis2, Some(*params), |x1, x2| potential_analytic(params, sw.rabi(x1), sw.rabi(x2)))
}

/// Normalized offset (Ω₂(x₁)² + Ω₂(x₂)² − 8Δ²)/γₚ from the two-atom resonance.
pub fn resonance_value(delta: f64, gamma_p: f64, o1: f64, o2: f64) -> f64 {
    (o1 * o1 + o2 * o2 - 8.0 * delta * delta) / gamma_p
}

/// Resonance field over a 1D position grid.
pub fn resonance_surface(sw: &StandingWave, delta: f64, gamma_p: f64, axis1: &[f64], axis2: &[f64]) -> PotentialSurface {
    PotentialSurface::from_fn(axis1, axis2, None, |x1, x2| resonance_value(delta, gamma_p, sw.rabi(x1), sw.rabi(x2)))
}

/// Resonance field for two atoms displaced by `s1`, `s2` along the unit
/// vector `dir` from the 3D sites `ri` and `rj`.
pub fn resonance_surface_3d(
    sw: &StandingWave,
    delta: f64,
    gamma_p: f64,
    ri: [f64; 3],
    rj: [f64; 3],
    dir: [f64; 3],
    offsets1: &[f64],
    offsets2: &[f64],
) -> PotentialSurface {
    let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    let u = [dir[0] / norm, dir[1] / norm, dir[2] / norm];
    let at = |c: [f64; 3], s: f64| [c[0] + s * u[0], c[1] + s * u[1], c[2] + s * u[2]];
    PotentialSurface::from_fn(offsets1, offsets2, None, |s1, s2| {
        resonance_value(delta, gamma_p, sw.rabi_3d(at(ri, s1)), sw.rabi_3d(at(rj, s2)))
    })
}

/// Soft-core radius (2|Δ|Ω₁C₆/Ω₂c³)^(1/6).
pub fn soft_core_radius(params: &DressingParams) -> Result<f64> {
    let c6 = params.c6.ok_or(Error::MissingC6)?;
    Ok((2.0 * params.delta.abs() * params.omega1 * c6 / params.omega2c.powi(3)).powf(1.0 / 6.0))
}

/// Number of other lattice sites within `r_c` of a given site.
pub fn sites_within(lattice_constant: f64, r_c: f64, dims: Dimensionality) -> u64 {
    let m = (r_c / lattice_constant).floor();
    if !(m >= 1.0) {
        return 0;
    }
    match dims {
        Dimensionality::One => 2 * m as u64,
        Dimensionality::Three => {
            let m = m as i64;
            let r2 = (r_c / lattice_constant) * (r_c / lattice_constant);
            let mut n = 0u64;
            for i in -m..=m {
                for j in -m..=m {
                    for k in -m..=m {
                        let d2 = (i * i + j * j + k * k) as f64;
                        if d2 > 0.0 && d2 <= r2 {
                            n += 1;
                        }
                    }
                }
            }
            n
        }
    }
}

/// N·u0 with N the number of sites within the soft core.
pub fn collective_depth(u0: f64, lattice_constant: f64, r_c: f64, dims: Dimensionality) -> f64 {
    sites_within(lattice_constant, r_c, dims) as f64 * u0
}

/// Loss rate Tr[ρ_atom (γₚσₚₚ + γₑσₑₑ)] of one atom of a pair state.
pub fn atom_loss_rate(params: &DressingParams, rho_pair: &DensityMatrix, atom: usize) -> Result<f64> {
    let r = quantum::partial_trace(rho_pair, atom)?;
    Ok(params.gamma_p * r.population(P) + params.gamma_e * r.population(E))
}

/// Per-atom loss rate, averaged over the two atoms.
pub fn loss_rate(params: &DressingParams, rho_pair: &DensityMatrix) -> Result<f64> {
    Ok(0.5 * (atom_loss_rate(params, rho_pair, 0)? + atom_loss_rate(params, rho_pair, 1)?))
}

/// Loss operator γₚσₚₚ + γₑσₑₑ on one atom.
pub fn loss_operator(params: &DressingParams) -> Operator {
    let mut m = DMatrix::zeros(3, 3);
    m[(P, P)] = crate::C64::new(params.gamma_p, 0.0);
    m[(E, E)] = crate::C64::new(params.gamma_e, 0.0);
    Operator::new(m).expect("square")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{DEFAULT_REGIME_THRESHOLD, DEFAULT_V_MAX_FACTOR};
    use core::f64::consts::TAU;

    fn sw() -> StandingWave {
        StandingWave { omega2c: 1.0, omega2sw: 0.5, k: TAU / 318e-9, theta: PI, dims: Dimensionality::One }
    }

    fn params() -> DressingParams {
        DressingParams {
            omega1: TAU * 20e3,
            omega2c: TAU * 10e6,
            omega2sw: TAU * 2.5e6,
            delta: TAU * 5e6,
            gamma_p: TAU * 7.6e3,
            gamma_e: TAU * 10.0,
            c6: None,
            wavelength: 318e-9,
            theta: PI,
            mass: 1.46e-25,
            v_max_factor: DEFAULT_V_MAX_FACTOR,
            regime_threshold: DEFAULT_REGIME_THRESHOLD,
        }
    }

    #[test]
    fn profile_nodes_and_antinodes() {
        let s = sw();
        assert_eq!(rabi_profile(&s, 0.0), 1.0);
        assert!((rabi_profile(&s, 318e-9 / 4.0) - 1.5).abs() < 1e-12);
        let half = StandingWave { theta: PI / 2.0, ..s };
        let x = 318e-9 / (4.0 * (PI / 4.0).sin());
        assert!((half.rabi(x) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn refined_axis_is_sorted_and_denser_at_node() {
        let s = sw();
        let xs = s.refined_axis(512, 8, 0.01 * s.period());
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
        assert!(xs.len() > 512);
    }

    #[test]
    fn analytic_peak_at_symmetric_resonance() {
        let p = params();
        let u = potential_analytic(&p, 2.0 * p.delta, 2.0 * p.delta);
        let want = p.omega1.powi(4) / (4.0 * p.delta * p.gamma_p * p.gamma_p);
        assert!((u / want - 1.0).abs() < 1e-12);
        let lp = lorentzian_params(&p, &p.standing_wave(Dimensionality::One));
        assert!((lp.u0_closed_form / lp.u0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fit_recovers_exact_lorentzian() {
        let samples: Vec<(f64, f64)> =
            linspace(-5e-9, 5e-9, 41).into_iter().map(|x| (x, lorentzian_profile(-3.0e6, 1e-9, 2e-10, x))).collect();
        let f = fit_lorentzian(&samples).unwrap();
        assert!((f.u0 / -3.0e6 - 1.0).abs() < 1e-9);
        assert!((f.w / 1e-9 - 1.0).abs() < 1e-9);
        assert!((f.x0 - 2e-10).abs() < 1e-9 * 1e-9);
    }

    #[test]
    fn fit_rejects_constant_and_short_input() {
        let flat: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0)).collect();
        assert!(matches!(fit_lorentzian(&flat), Err(Error::FitDiverged { .. })));
        assert!(matches!(fit_lorentzian(&flat[..5]), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn site_counting() {
        assert_eq!(sites_within(1.0, 0.9, Dimensionality::One), 0);
        assert_eq!(sites_within(1.0, 5.2, Dimensionality::One), 10);
        assert_eq!(sites_within(1.0, 1.0, Dimensionality::Three), 6);
        assert_eq!(sites_within(1.0, 2f64.sqrt(), Dimensionality::Three), 18);
        assert_eq!(collective_depth(2.0, 1.0, 0.5, Dimensionality::Three), 0.0);
    }

    #[test]
    fn soft_core_defining_relation() {
        let mut p = params();
        assert_eq!(soft_core_radius(&p), Err(Error::MissingC6));
        p.c6 = Some(TAU * 1e-19);
        let rc = soft_core_radius(&p).unwrap();
        let lhs = p.rydberg_fraction() * p.c6.unwrap() / rc.powi(6);
        assert!((lhs / p.two_photon_rabi() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ground_state_has_no_loss() {
        assert_eq!(loss_rate(&params(), &DensityMatrix::basis(9, 0)).unwrap(), 0.0);
    }
}
