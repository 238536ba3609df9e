//! Single- and double-excitation subspaces of the weakly driven pair.
//!
//! With Ω₁ ≪ Ω₂ the pair space splits into the ground state, the
//! single-excitation blocks `{gp, ge}` and the double-excitation block
//! `{pp, pe, ep, ee}`. Diagonalizing the latter shows the branch that
//! crosses the ground-state energy when Ω₂(x₁)² + Ω₂(x₂)² = 8Δ².

use alloc::vec::Vec;

use nalgebra::DMatrix;

#[allow(unused_imports)]
use crate::math::*;
use crate::quantum::Operator;
use crate::C64;

/// Eigen-decomposition of a subspace block.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSpectrum {
    pub labels: Vec<&'static str>,
    /// Ascending; a decoupled state is reported as `+∞`.
    pub energies: Vec<f64>,
    /// Columns are eigenvectors, first nonzero component real positive.
    pub eigenvectors: DMatrix<C64>,
}

impl SubspaceSpectrum {
    /// Largest deviation of `V†V` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let v = &self.eigenvectors;
        let g = v.adjoint() * v;
        let n = g.nrows();
        (g - DMatrix::<C64>::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn energy(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| *l == label).map(|i| self.energies[i])
    }
}

pub const S2_LABELS: [&str; 2] = ["beta_minus", "beta_plus"];

/// Labels of the double-excitation states in ascending energy for V ≫ |Δ|.
pub const S3_LABELS: [&str; 4] = ["lambda_minus", "lambda_1", "lambda_plus", "lambda_0"];

/// Fixes the phase so the first non-negligible component is real positive.
fn fix_phase(v: &mut DMatrix<C64>) {
    for mut col in v.column_iter_mut() {
        let scale = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if let Some(z) = col.iter().copied().find(|z| z.norm() > 1e-10 * scale) {
            let phase = z.conj() / z.norm();
            col.iter_mut().for_each(|c| *c *= phase);
        }
    }
}

/// Dense Hermitian diagonalization with ascending energies.
pub fn diagonalize(op: &Operator, labels: &[&'static str]) -> SubspaceSpectrum {
    let eig = op.matrix().clone().symmetric_eigen();
    let n = op.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let energies = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    fix_phase(&mut vecs);
    SubspaceSpectrum { labels: labels.to_vec(), energies, eigenvectors: vecs }
}

/// The `{gp, ge}` block with Rabi frequency `omega2` on p ↔ e.
pub fn s2_matrix(delta: f64, omega2: f64) -> Operator {
    Operator::from_real(2, &[-delta, 0.5 * omega2, 0.5 * omega2, 0.0]).expect("2x2")
}

/// Numerically diagonalized single-excitation block.
pub fn s2_spectrum(delta: f64, omega2: f64) -> SubspaceSpectrum {
    diagonalize(&s2_matrix(delta, omega2), &S2_LABELS)
}

/// β± = −Δ/2 ± ½√(Δ² + Ω₂²), ascending.
pub fn s2_closed_form(delta: f64, omega2: f64) -> [f64; 2] {
    let r = 0.5 * (delta * delta + omega2 * omega2).sqrt();
    [-0.5 * delta - r, -0.5 * delta + r]
}

/// The `{pp, pe, ep, ee}` block with interaction shift `v` on ee.
pub fn s3_matrix(delta: f64, omega2_x1: f64, omega2_x2: f64, v: f64) -> Operator {
    let a = 0.5 * omega2_x1;
    let b = 0.5 * omega2_x2;
    #[rustfmt::skip]
    let m = [
        -2.0 * delta, b,      a,      0.0,
        b,            -delta, 0.0,    a,
        a,            0.0,    -delta, b,
        0.0,          a,      b,      v,
    ];
    Operator::from_real(4, &m).expect("4x4")
}

/// Numerically diagonalized double-excitation block.
pub fn s3_spectrum(delta: f64, omega2_x1: f64, omega2_x2: f64, v: f64) -> SubspaceSpectrum {
    diagonalize(&s3_matrix(delta, omega2_x1, omega2_x2, v), &S3_LABELS)
}

/// Eigenstates of the double-excitation block for V → ∞.
///
/// |ee⟩ decouples (energy `+∞`); the rest are λ₁ = −Δ and
/// λ± = −3Δ/2 ± ½√(Δ² + Ω₂(x₁)² + Ω₂(x₂)²).
pub fn s3_asymptotic(delta: f64, omega2_x1: f64, omega2_x2: f64) -> SubspaceSpectrum {
    let (a, b) = (omega2_x1, omega2_x2);
    let r = 0.5 * (delta * delta + a * a + b * b).sqrt();
    let lm = -1.5 * delta - r;
    let lp = -1.5 * delta + r;
    let l1 = -delta;

    let mut vecs = DMatrix::<C64>::zeros(4, 4);
    let mut put = |col: usize, comps: [f64; 4]| {
        let n = comps.iter().map(|c| c * c).sum::<f64>().sqrt();
        for (i, c) in comps.iter().enumerate() {
            vecs[(i, col)] = C64::new(c / n, 0.0);
        }
    };
    put(0, [2.0 * (lm + delta), b, a, 0.0]);
    put(1, [0.0, a, -b, 0.0]);
    put(2, [2.0 * (lp + delta), b, a, 0.0]);
    put(3, [0.0, 0.0, 0.0, 1.0]);
    fix_phase(&mut vecs);
    SubspaceSpectrum { labels: S3_LABELS.to_vec(), energies: alloc::vec![lm, l1, lp, f64::INFINITY], eigenvectors: vecs }
}

/// (Ω₂(x₁)² + Ω₂(x₂)² − 8Δ²)/γₚ².
pub fn resonance_offset(delta: f64, omega2_x1: f64, omega2_x2: f64, gamma_p: f64) -> f64 {
    (omega2_x1 * omega2_x1 + omega2_x2 * omega2_x2 - 8.0 * delta * delta) / (gamma_p * gamma_p)
}

/// Offset in linewidths, (Ω₂(x₁)² + Ω₂(x₂)² − 8Δ²)/(8|Δ|γₚ).
///
/// Equals ±1 when one atom sits at Ω₂ = 2|Δ| and the other is detuned
/// from 2|Δ| by ±2γₚ, to first order in γₚ/|Δ|.
pub fn resonance_offset_linewidths(delta: f64, omega2_x1: f64, omega2_x2: f64, gamma_p: f64) -> f64 {
    (omega2_x1 * omega2_x1 + omega2_x2 * omega2_x2 - 8.0 * delta * delta) / (8.0 * delta.abs() * gamma_p)
}
