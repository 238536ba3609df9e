//! Two-atom motional ground states on a potential surface.
//!
//! The relative and centre-of-mass motion of two atoms is treated as one
//! particle in the plane `(x₁, x₂)`; the ground state follows from
//! split-step imaginary-time propagation with a spectral kinetic term on a
//! periodic grid. An optional local nonlinearity `g|ψ|²` is supported.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::lattice::PotentialSurface;
use crate::units::HBAR;
use crate::C64;

/// A normalized wavefunction on a uniform grid; `psi[i * n2 + j]` sits at
/// `(axis1[i], axis2[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction2D {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    pub psi: Vec<C64>,
    /// Total energy (rad/s).
    pub energy: f64,
    pub kinetic: f64,
    pub potential: f64,
    /// `Σ|ψ|² dA`.
    pub norm: f64,
    pub iterations: usize,
}

impl Wavefunction2D {
    pub fn cell_area(&self) -> f64 {
        uniform_step(&self.axis1).unwrap_or(1.0) * uniform_step(&self.axis2).unwrap_or(1.0)
    }

    pub fn density(&self) -> DMatrix<f64> {
        let n2 = self.axis2.len();
        DMatrix::from_fn(self.axis1.len(), n2, |i, j| self.psi[i * n2 + j].norm_sqr())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateOptions {
    /// Imaginary-time step (s).
    pub dt: f64,
    /// Convergence threshold on the energy change per step (rad/s).
    pub tol: f64,
    /// Nonlinearity strength (rad/s·m²).
    pub g_nl: f64,
    pub max_iters: usize,
}

impl GroundStateOptions {
    pub fn new(dt: f64, tol: f64) -> Self {
        Self { dt, tol, g_nl: 0.0, max_iters: 200_000 }
    }
}

/// Spacing of a uniform axis, or `None` when it is not uniform.
fn uniform_step(axis: &[f64]) -> Option<f64> {
    if axis.len() < 2 {
        return None;
    }
    let h = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
    let ok = axis.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs());
    (ok && h > 0.0).then_some(h)
}

/// True when the global minimum is interior and below the boundary.
pub fn has_interior_well(u: &PotentialSurface) -> bool {
    let (n1, n2) = u.values.shape();
    if n1 < 3 || n2 < 3 {
        return false;
    }
    let mut boundary = f64::INFINITY;
    let mut interior = f64::INFINITY;
    for i in 0..n1 {
        for j in 0..n2 {
            let v = u.values[(i, j)];
            if i == 0 || j == 0 || i == n1 - 1 || j == n2 - 1 {
                boundary = boundary.min(v);
            } else {
                interior = interior.min(v);
            }
        }
    }
    let scale = u.values.abs().max();
    interior < boundary - 1e-9 * scale
}

struct Fft2 {
    n1: usize,
    n2: usize,
    rows_f: Arc<dyn Fft<f64>>,
    rows_i: Arc<dyn Fft<f64>>,
    cols_f: Arc<dyn Fft<f64>>,
    cols_i: Arc<dyn Fft<f64>>,
    col: Vec<C64>,
}

impl Fft2 {
    fn new(n1: usize, n2: usize) -> Self {
        let mut p = FftPlanner::new();
        Self {
            n1,
            n2,
            rows_f: p.plan_fft_forward(n2),
            rows_i: p.plan_fft_inverse(n2),
            cols_f: p.plan_fft_forward(n1),
            cols_i: p.plan_fft_inverse(n1),
            col: vec![C64::new(0.0, 0.0); n1],
        }
    }

    fn run(&mut self, buf: &mut [C64], forward: bool) {
        let (rows, cols) = if forward { (&self.rows_f, &self.cols_f) } else { (&self.rows_i, &self.cols_i) };
        rows.process(buf);
        for j in 0..self.n2 {
            for i in 0..self.n1 {
                self.col[i] = buf[i * self.n2 + j];
            }
            cols.process(&mut self.col);
            for i in 0..self.n1 {
                buf[i * self.n2 + j] = self.col[i];
            }
        }
        if !forward {
            let s = 1.0 / (self.n1 * self.n2) as f64;
            buf.iter_mut().for_each(|z| *z *= s);
        }
    }
}

fn wavenumbers(n: usize, h: f64) -> Vec<f64> {
    let l = n as f64 * h;
    (0..n)
        .map(|i| {
            let k = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
            std::f64::consts::TAU * k / l
        })
        .collect()
}

struct Energies {
    kinetic: f64,
    potential: f64,
    interaction: f64,
}

impl Energies {
    fn total(&self) -> f64 {
        self.kinetic + self.potential + self.interaction
    }
}

/// Imaginary-time ground state on `u` for two atoms of mass `mass`.
///
/// Each step applies `e^{−V dt/2} e^{−T dt} e^{−V dt/2}` and renormalizes.
/// The energy must not increase between steps (slack `1e-12·|E|`).
pub fn ground_state(u: &PotentialSurface, mass: f64, opts: &GroundStateOptions) -> Result<Wavefunction2D> {
    let (n1, n2) = u.values.shape();
    let h1 = uniform_step(&u.axis1).ok_or_else(|| Error::invalid("axis1", "grid must be uniform"))?;
    let h2 = uniform_step(&u.axis2).ok_or_else(|| Error::invalid("axis2", "grid must be uniform"))?;
    if !(mass > 0.0) {
        return Err(Error::invalid("mass", "must be > 0"));
    }
    let hbar_m = HBAR / mass;
    let bound = 0.5 * h1.min(h2).powi(2) / hbar_m;
    if !(opts.dt > 0.0 && opts.dt < bound) {
        return Err(Error::invalid("dt", format!("must lie in (0, {bound:e}) s for this grid and mass")));
    }
    if !has_interior_well(u) {
        return Err(Error::BoxedSpectrumUnsupported);
    }

    let da = h1 * h2;
    let k1 = wavenumbers(n1, h1);
    let k2 = wavenumbers(n2, h2);
    let t_kin: Vec<f64> =
        (0..n1 * n2).map(|idx| 0.5 * hbar_m * (k1[idx / n2].powi(2) + k2[idx % n2].powi(2))).collect();
    let kin_prop: Vec<f64> = t_kin.iter().map(|t| (-t * opts.dt).exp()).collect();
    let v: Vec<f64> = (0..n1 * n2).map(|idx| u.values[(idx / n2, idx % n2)]).collect();
    let vmin = v.iter().copied().fold(f64::INFINITY, f64::min);

    let ((ic, jc), _) = argmin(&u.values);
    let (x1c, x2c) = (u.axis1[ic], u.axis2[jc]);
    let s1 = 0.125 * n1 as f64 * h1;
    let s2 = 0.125 * n2 as f64 * h2;
    let mut psi: Vec<C64> = (0..n1 * n2)
        .map(|idx| {
            let a = (u.axis1[idx / n2] - x1c) / s1;
            let b = (u.axis2[idx % n2] - x2c) / s2;
            C64::new((-0.5 * (a * a + b * b)).exp(), 0.0)
        })
        .collect();
    normalize(&mut psi, da);

    let mut fft = Fft2::new(n1, n2);
    let mut work = psi.clone();
    let energy = |psi: &[C64], work: &mut Vec<C64>, fft: &mut Fft2| -> Energies {
        work.copy_from_slice(psi);
        fft.run(work, true);
        let nrm = (n1 * n2) as f64;
        let kinetic = work.iter().zip(&t_kin).map(|(z, t)| z.norm_sqr() * t).sum::<f64>() * da / nrm;
        let potential = psi.iter().zip(&v).map(|(z, v)| z.norm_sqr() * v).sum::<f64>() * da;
        let interaction = 0.5 * opts.g_nl * psi.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() * da;
        Energies { kinetic, potential, interaction }
    };

    let mut e_prev = energy(&psi, &mut work, &mut fft).total();
    let mut last_delta = f64::INFINITY;
    for it in 1..=opts.max_iters {
        let half_v = |psi: &mut [C64]| {
            for (z, v) in psi.iter_mut().zip(&v) {
                let vv = v - vmin + opts.g_nl * z.norm_sqr();
                *z *= (-0.5 * vv * opts.dt).exp();
            }
        };
        half_v(&mut psi);
        fft.run(&mut psi, true);
        psi.iter_mut().zip(&kin_prop).for_each(|(z, k)| *z *= *k);
        fft.run(&mut psi, false);
        half_v(&mut psi);
        let n = normalize(&mut psi, da);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::UnstableStep { norm: n });
        }

        let en = energy(&psi, &mut work, &mut fft);
        let e = en.total();
        let increase = e - e_prev;
        if increase > 1e-12 * e.abs().max(e_prev.abs()) {
            return Err(Error::EnergyIncreased { step: it, increase });
        }
        last_delta = increase.abs();
        e_prev = e;
        if last_delta < opts.tol {
            let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * da;
            return Ok(Wavefunction2D {
                axis1: u.axis1.clone(),
                axis2: u.axis2.clone(),
                psi,
                energy: e,
                kinetic: en.kinetic,
                potential: en.potential,
                norm,
                iterations: it,
            });
        }
    }
    Err(Error::NotConverged { max_iters: opts.max_iters, last_delta })
}

fn normalize(psi: &mut [C64], da: f64) -> f64 {
    let n = psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * da;
    let s = 1.0 / n.sqrt();
    psi.iter_mut().for_each(|z| *z *= s);
    n
}

fn argmin(m: &DMatrix<f64>) -> ((usize, usize), f64) {
    let mut best = ((0, 0), f64::INFINITY);
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] < best.1 {
                best = ((i, j), m[(i, j)]);
            }
        }
    }
    best
}

/// Marginal densities and the Pearson coefficient of the joint density.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    /// Correlation of x₁ and x₂.
    pub correlation: f64,
}

pub fn density_marginals(psi: &Wavefunction2D) -> Marginals {
    let rho = psi.density();
    let (h1, h2) = (uniform_step(&psi.axis1).unwrap_or(1.0), uniform_step(&psi.axis2).unwrap_or(1.0));
    let p1: Vec<f64> = (0..rho.nrows()).map(|i| rho.row(i).sum() * h2).collect();
    let p2: Vec<f64> = (0..rho.ncols()).map(|j| rho.column(j).sum() * h1).collect();
    let correlation = weighted_correlation(&rho, &psi.axis1, &psi.axis2, |x| x, |x| x);
    Marginals { p1, p2, correlation }
}

/// Correlation of the displacement magnitudes |x₁ − c₁| and |x₂ − c₂|.
///
/// Around a pair of nodes the density is symmetric under reflection of
/// either coordinate, which forces the plain x₁–x₂ correlation to zero;
/// the magnitudes carry the correlation of the equipotential diamond.
pub fn displacement_correlation(psi: &Wavefunction2D, centre: (f64, f64)) -> f64 {
    let rho = psi.density();
    weighted_correlation(&rho, &psi.axis1, &psi.axis2, |x| (x - centre.0).abs(), |x| (x - centre.1).abs())
}

fn weighted_correlation(rho: &DMatrix<f64>, a1: &[f64], a2: &[f64], f1: impl Fn(f64) -> f64, f2: impl Fn(f64) -> f64) -> f64 {
    let total: f64 = rho.sum();
    if total == 0.0 {
        return 0.0;
    }
    let (mut m1, mut m2) = (0.0, 0.0);
    for i in 0..rho.nrows() {
        for j in 0..rho.ncols() {
            m1 += rho[(i, j)] * f1(a1[i]);
            m2 += rho[(i, j)] * f2(a2[j]);
        }
    }
    m1 /= total;
    m2 /= total;
    let (mut c12, mut c11, mut c22) = (0.0, 0.0, 0.0);
    for i in 0..rho.nrows() {
        for j in 0..rho.ncols() {
            let (d1, d2) = (f1(a1[i]) - m1, f2(a2[j]) - m2);
            c12 += rho[(i, j)] * d1 * d2;
            c11 += rho[(i, j)] * d1 * d1;
            c22 += rho[(i, j)] * d2 * d2;
        }
    }
    if c11 <= 0.0 || c22 <= 0.0 {
        return 0.0;
    }
    c12 / (c11 * c22).sqrt()
}

/// Normal-mode structure of a trap site for the pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeReport {
    /// ∂²U/∂s₊² along s₊ = (δx₁ + δx₂)/√2 (rad/s/m²).
    pub stiffness_plus: f64,
    /// ∂²U/∂s₋² along s₋ = (δx₁ − δx₂)/√2.
    pub stiffness_minus: f64,
    /// √(ħ|k₊|/m).
    pub omega_plus: f64,
    pub omega_minus: f64,
    /// x₁–x₂ correlation of the harmonic ground state,
    /// (1/ω₊ − 1/ω₋)/(1/ω₊ + 1/ω₋).
    pub correlation: f64,
    /// Both stiffnesses are positive (a well along both diagonals).
    pub bound: bool,
}

/// Minimum grid points per direction inside the fit window.
pub const MIN_FIT_POINTS: usize = 3;

/// Quadratic fit of `u` around the grid extremum nearest `centre` over `|δx₁|, |δx₂| ≤ half_window`.
pub fn mode_analysis(u: &PotentialSurface, centre: (f64, f64), mass: f64, half_window: f64) -> Result<ModeReport> {
    let nearest = |axis: &[f64], x: f64| -> Option<usize> {
        let h = uniform_step(axis)?;
        let i = ((x - axis[0]) / h).round();
        (i >= 0.0 && (i as usize) < axis.len() && (axis[i as usize] - x).abs() <= 0.5 * h * (1.0 + 1e-9))
            .then_some(i as usize)
    };
    let not_ext = Error::NotAnExtremum { x1: centre.0, x2: centre.1 };
    let (Some(ic), Some(jc)) = (nearest(&u.axis1, centre.0), nearest(&u.axis2, centre.1)) else {
        return Err(not_ext);
    };
    let (n1, n2) = u.values.shape();
    let uc = u.values[(ic, jc)];
    let slack = 1e-12 * uc.abs();
    let (mut is_max, mut is_min) = (true, true);
    for di in -1i64..=1 {
        for dj in -1i64..=1 {
            let (i, j) = (ic as i64 + di, jc as i64 + dj);
            if i < 0 || j < 0 || i >= n1 as i64 || j >= n2 as i64 {
                continue;
            }
            let v = u.values[(i as usize, j as usize)];
            is_max &= v <= uc + slack;
            is_min &= v >= uc - slack;
        }
    }
    if !(is_max || is_min) {
        return Err(not_ext);
    }

    let in1: Vec<usize> = (0..n1).filter(|&i| (u.axis1[i] - u.axis1[ic]).abs() <= half_window).collect();
    let in2: Vec<usize> = (0..n2).filter(|&j| (u.axis2[j] - u.axis2[jc]).abs() <= half_window).collect();
    let points = in1.len().min(in2.len());
    if points < MIN_FIT_POINTS {
        return Err(Error::FitWindowTooSmall { points });
    }

    // U ≈ c + g₁δ₁ + g₂δ₂ + ½(a δ₁² + 2b δ₁δ₂ + d δ₂²), scaled by the window.
    let s = half_window;
    let rows = in1.len() * in2.len();
    let mut a = DMatrix::<f64>::zeros(rows, 6);
    let mut y = DVector::<f64>::zeros(rows);
    let mut r = 0;
    for &i in &in1 {
        for &j in &in2 {
            let d1 = (u.axis1[i] - u.axis1[ic]) / s;
            let d2 = (u.axis2[j] - u.axis2[jc]) / s;
            a.row_mut(r).copy_from_slice(&[1.0, d1, d2, 0.5 * d1 * d1, d1 * d2, 0.5 * d2 * d2]);
            y[r] = u.values[(i, j)];
            r += 1;
        }
    }
    let coef = a.svd(true, true).solve(&y, 1e-14).map_err(|_| Error::FitWindowTooSmall { points })?;
    let (haa, hab, hbb) = (coef[3] / (s * s), coef[4] / (s * s), coef[5] / (s * s));
    let kp = 0.5 * (haa + 2.0 * hab + hbb);
    let km = 0.5 * (haa - 2.0 * hab + hbb);
    let omega = |k: f64| (HBAR * k.abs() / mass).sqrt();
    let (wp, wm) = (omega(kp), omega(km));
    let correlation = if wp > 0.0 && wm > 0.0 { (1.0 / wp - 1.0 / wm) / (1.0 / wp + 1.0 / wm) } else { 0.0 };
    Ok(ModeReport {
        stiffness_plus: kp,
        stiffness_minus: km,
        omega_plus: wp,
        omega_minus: wm,
        correlation,
        bound: kp > 0.0 && km > 0.0,
    })
}
