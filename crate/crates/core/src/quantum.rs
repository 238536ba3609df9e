//! Dressed-atom operators, the two-atom Lindblad generator and its steady state.
//!
//! Single-atom basis `(g, p, e)`; pair basis is the row-major product with
//! index `3·a + b` for atom 1 in `a` and atom 2 in `b`. Density matrices are
//! vectorized row-major, so `vec(AρB) = (A ⊗ Bᵀ) vec(ρ)`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::math::*;
use crate::params::DressingParams;
use crate::C64;

pub const G: usize = 0;
pub const P: usize = 1;
pub const E: usize = 2;

/// Pair-basis index of |ee⟩.
pub const EE: usize = 3 * E + E;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Tolerances of the [`DensityMatrix`] invariants.
pub const TRACE_TOL: f64 = 1e-10;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;

/// A complex square matrix on the 3-, 4- or 9-dimensional dressed space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    m: DMatrix<C64>,
}

impl Operator {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        Ok(Self { m })
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        Ok(Self { m: DMatrix::from_row_iterator(dim, dim, entries.iter().map(|&x| C64::new(x, 0.0))) })
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: DMatrix::identity(dim, dim) }
    }

    /// Single-atom transition operator σ_ab = |a⟩⟨b|.
    pub fn transition(a: usize, b: usize) -> Self {
        let mut m = DMatrix::zeros(3, 3);
        m[(a, b)] = ONE;
        Self { m }
    }

    /// `op` acting on atom `atom` (0 or 1) of the pair.
    pub fn on_atom(op: &Operator, atom: usize) -> Self {
        let id = DMatrix::identity(op.dim(), op.dim());
        if atom == 0 {
            Self { m: op.m.kronecker(&id) }
        } else {
            Self { m: id.kronecker(&op.m) }
        }
    }

    /// Permutation exchanging the two atoms of the pair space.
    pub fn swap() -> Self {
        let mut m = DMatrix::zeros(9, 9);
        for a in 0..3 {
            for b in 0..3 {
                m[(3 * b + a, 3 * a + b)] = ONE;
            }
        }
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn kron(&self, other: &Operator) -> Self {
        Self { m: self.m.kronecker(&other.m) }
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    /// Largest entry of `|H − H†|` relative to the largest entry of `|H|`.
    pub fn hermiticity_error(&self) -> f64 {
        let scale = max_abs(&self.m);
        if scale == 0.0 {
            return 0.0;
        }
        max_abs(&(&self.m - self.m.adjoint())) / scale
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() <= 1e-12
    }

    /// Eigenvalues in ascending order, assuming the operator is Hermitian.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.m.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

impl core::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator { m: &self.m + &rhs.m }
    }
}

/// A validated density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<C64>,
}

/// Distances of a matrix from the density-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validity {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl Validity {
    pub fn of(m: &DMatrix<C64>) -> Self {
        let trace_error = (m.trace() - ONE).norm();
        let hermiticity_error = max_abs(&(m - m.adjoint()));
        let h = (m + m.adjoint()).scale(0.5);
        let min_eigenvalue = h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        Self { trace_error, hermiticity_error, min_eigenvalue }
    }

    pub fn is_valid(&self) -> bool {
        self.trace_error <= TRACE_TOL
            && self.hermiticity_error <= HERMITIAN_TOL
            && self.min_eigenvalue >= -PSD_TOL
    }
}

impl DensityMatrix {
    /// Validates trace, hermiticity and positivity.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let v = Validity::of(&m);
        if !v.is_valid() {
            return Err(Error::invalid(
                "rho",
                format!(
                    "not a density matrix: |tr-1| = {:e}, |rho-rho^dag| = {:e}, min eig = {:e}",
                    v.trace_error, v.hermiticity_error, v.min_eigenvalue
                ),
            ));
        }
        Ok(Self { m })
    }

    /// The pure state |ψ⟩⟨ψ| of a normalized vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let v = DVector::from_column_slice(psi);
        Self::new(&v * v.adjoint())
    }

    /// |i⟩⟨i| in dimension `dim`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(i, i)] = ONE;
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn validity(&self) -> Validity {
        Validity::of(&self.m)
    }

    pub fn population(&self, i: usize) -> f64 {
        self.m[(i, i)].re
    }

    pub fn kron(&self, other: &DensityMatrix) -> Self {
        Self { m: self.m.kronecker(&other.m) }
    }

    /// Conjugation `U ρ U†`, e.g. by the atom swap.
    pub fn conjugate_by(&self, u: &Operator) -> Self {
        Self { m: &u.m * &self.m * u.m.adjoint() }
    }

    pub fn vectorize(&self) -> DVector<C64> {
        vectorize(&self.m)
    }
}

/// A linear map on row-major vectorized density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    m: DMatrix<C64>,
}

impl Superoperator {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        let d = isqrt(m.nrows());
        if !m.is_square() || d * d != m.nrows() {
            return Err(Error::DimensionMismatch { expected: d * d, found: m.nrows() });
        }
        Ok(Self { m })
    }

    /// Dimension of the vectorized space (81 for the pair problem).
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// Dimension of the underlying Hilbert space.
    pub fn hilbert_dim(&self) -> usize {
        isqrt(self.m.nrows())
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    /// Applies the map to a (not necessarily valid) matrix.
    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let d = self.hilbert_dim();
        unvectorize(&(&self.m * vectorize(rho)), d)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.m.row_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
    }
}

pub fn vectorize(m: &DMatrix<C64>) -> DVector<C64> {
    let d = m.nrows();
    DVector::from_iterator(d * m.ncols(), (0..d).flat_map(|i| m.row(i).iter().copied().collect::<Vec<_>>()))
}

pub fn unvectorize(v: &DVector<C64>, dim: usize) -> DMatrix<C64> {
    DMatrix::from_row_slice(dim, dim, v.as_slice())
}

/// Single-atom Hamiltonian with the given local upper-leg Rabi frequency.
pub fn single_hamiltonian(params: &DressingParams, omega2_local: f64) -> Operator {
    let mut m = DMatrix::zeros(3, 3);
    let c1 = C64::new(0.5 * params.omega1, 0.0);
    let c2 = C64::new(0.5 * omega2_local, 0.0);
    m[(G, P)] = c1;
    m[(P, G)] = c1;
    m[(P, E)] = c2;
    m[(E, P)] = c2;
    m[(P, P)] = C64::new(-params.delta, 0.0);
    Operator { m }
}

/// `H₁ ⊗ 𝟙 + 𝟙 ⊗ H₂ + v |ee⟩⟨ee|`.
pub fn pair_hamiltonian(params: &DressingParams, omega2_x1: f64, omega2_x2: f64, v: f64) -> Operator {
    let h1 = single_hamiltonian(params, omega2_x1);
    let h2 = single_hamiltonian(params, omega2_x2);
    let mut h = &Operator::on_atom(&h1, 0) + &Operator::on_atom(&h2, 1);
    h.m[(EE, EE)] += C64::new(v, 0.0);
    h
}

/// Per-atom jump operators `√γₚ σ_gp` and `√γₑ σ_pe`.
pub fn jump_operators(params: &DressingParams) -> [Operator; 2] {
    let mut gp = Operator::transition(G, P);
    gp.m *= C64::new(params.gamma_p.sqrt(), 0.0);
    let mut pe = Operator::transition(P, E);
    pe.m *= C64::new(params.gamma_e.sqrt(), 0.0);
    [gp, pe]
}

/// Lindblad generator for a one-atom (dim 3) or two-atom (dim 9) Hamiltonian.
pub fn liouvillian(h: &Operator, params: &DressingParams) -> Result<Superoperator> {
    let d = h.dim();
    let atoms = match d {
        3 => 1,
        9 => 2,
        _ => return Err(Error::DimensionMismatch { expected: 9, found: d }),
    };
    let id = DMatrix::<C64>::identity(d, d);
    let mi = C64::new(0.0, -1.0);
    let mut l = (h.m.kronecker(&id) - id.kronecker(&h.m.transpose())) * mi;
    for single in jump_operators(params) {
        for atom in 0..atoms {
            let c = if atoms == 1 { single.m.clone() } else { Operator::on_atom(&single, atom).m };
            let cdc = c.adjoint() * &c;
            l += c.kronecker(&c.conjugate());
            l -= (cdc.kronecker(&id) + id.kronecker(&cdc.transpose())).scale(0.5);
        }
    }
    Ok(Superoperator { m: l })
}

/// Threshold on the two smallest singular values of the row-equilibrated
/// generator below which the null space is treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Relative residual bound `‖L[ρ̄]‖∞ ≤ RESIDUAL_TOL · ‖L‖∞`.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Unique stationary state of `l`.
///
/// Solves `L ρ = 0` with one row replaced by `Tr ρ = 1`, then checks the
/// residual. Degeneracy is detected from the singular values of the
/// row-equilibrated generator: the steady state is rejected when the
/// second-smallest singular value is within `DEGENERACY_TOL` of the largest
/// scale or of the smallest one.
pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    let n = l.dim();
    let d = l.hilbert_dim();

    let mut eq = l.m.clone();
    for mut row in eq.row_iter_mut() {
        let s = row.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if s > 0.0 {
            row.scale_mut(1.0 / s);
        }
    }
    let mut sv: Vec<f64> = eq.singular_values().iter().copied().collect();
    sv.sort_by(f64::total_cmp);
    let (smallest, second) = (sv[0], sv.get(1).copied().unwrap_or(f64::INFINITY));
    let top = sv[n - 1];
    if second <= DEGENERACY_TOL * top || (second - smallest) <= DEGENERACY_TOL * second {
        return Err(Error::DegenerateSteadyState { smallest, second });
    }

    let mut a = l.m.clone();
    for j in 0..n {
        a[(0, j)] = ZERO;
    }
    for i in 0..d {
        a[(0, i * d + i)] = ONE;
    }
    let mut b = DVector::zeros(n);
    b[0] = ONE;
    let x = a.lu().solve(&b).ok_or(Error::DegenerateSteadyState { smallest, second })?;

    let rho = unvectorize(&x, d);
    let mut rho = (&rho + rho.adjoint()).scale(0.5);
    let tr = rho.trace();
    rho /= tr;

    let residual = (&l.m * vectorize(&rho)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let bound = RESIDUAL_TOL * l.norm_inf();
    if !(residual <= bound) {
        return Err(Error::SteadyStateResidual { residual, bound });
    }
    Ok(DensityMatrix { m: rho })
}

/// `Tr(ρ O)`.
pub fn expectation(rho: &DensityMatrix, op: &Operator) -> Result<C64> {
    if rho.dim() != op.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: op.dim() });
    }
    let mut acc = ZERO;
    for i in 0..rho.dim() {
        for k in 0..rho.dim() {
            acc += rho.m[(i, k)] * op.m[(k, i)];
        }
    }
    Ok(acc)
}

/// Reduced state of atom `keep` (0 or 1) of a pair state.
pub fn partial_trace(rho: &DensityMatrix, keep: usize) -> Result<DensityMatrix> {
    if rho.dim() != 9 {
        return Err(Error::DimensionMismatch { expected: 9, found: rho.dim() });
    }
    if keep > 1 {
        return Err(Error::invalid("keep", format!("atom index must be 0 or 1, got {keep}")));
    }
    let mut r = DMatrix::zeros(3, 3);
    for a in 0..3 {
        for b in 0..3 {
            let mut acc = ZERO;
            for s in 0..3 {
                acc += if keep == 0 { rho.m[(3 * a + s, 3 * b + s)] } else { rho.m[(3 * s + a, 3 * s + b)] };
            }
            r[(a, b)] = acc;
        }
    }
    Ok(DensityMatrix { m: r })
}

/// Trace distance ½‖ρ − σ‖₁ of two Hermitian matrices.
pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let diff = a - b;
    let h = (&diff + diff.adjoint()).scale(0.5);
    0.5 * h.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>()
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn isqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}
