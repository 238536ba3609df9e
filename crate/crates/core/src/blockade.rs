//! Blockade leakage through a manifold of dipole-coupled Rydberg pair states.
//!
//! Basis of the mixing Hamiltonian: `gg`, the symmetric single excitation
//! `r₀g⁺`, then the pair states of the manifold with the target pair `r₀r₀`
//! first. Energies are referenced to `r₀r₀` and all dynamics is unitary.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, SQRT_2, TAU};
use core::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::math::*;
use crate::quantum::Operator;
use crate::C64;

/// Header of the state table of the manifold CSV.
pub const STATE_HEADER: &str = "label,delta_rad_per_s";
/// Section marker and header of the coupling table.
pub const COUPLING_MARKER: &str = "# couplings";
pub const COUPLING_HEADER: &str = "label_i,label_j,c3_rad_per_s_m3";

/// Manifolds below this size are propagated with dense linear algebra.
pub const DENSE_LIMIT: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct PairState {
    pub label: String,
    /// Energy offset from the target pair (rad/s).
    pub delta: f64,
}

/// Rydberg pair states and their dipolar couplings.
///
/// Couplings are stored once per unordered pair `i < j` with value C₃
/// (rad/s·m³), any angular factor included.
#[derive(Debug, Clone, PartialEq)]
pub struct PairManifold {
    states: Vec<PairState>,
    couplings: Vec<(usize, usize, f64)>,
    r0_index: usize,
}

impl PairManifold {
    /// Builds a manifold from states and directed coupling entries.
    ///
    /// An entry given in both directions must carry the same value; the
    /// target pair is `states[r0_index]` and must have zero detuning.
    pub fn new(states: Vec<PairState>, entries: &[(usize, usize, f64)], r0_index: usize) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::invalid("states", "manifold needs at least one pair state"));
        }
        if r0_index >= states.len() {
            return Err(Error::invalid("r0_index", format!("{r0_index} out of range")));
        }
        if states[r0_index].delta != 0.0 {
            return Err(Error::invalid("delta", "target pair must have zero detuning"));
        }
        let mut labels: Vec<&str> = states.iter().map(|s| s.label.as_str()).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateLabel(w[0].to_string()));
        }
        for s in &states {
            if !s.delta.is_finite() {
                return Err(Error::invalid("delta", format!("non-finite detuning for `{}`", s.label)));
            }
        }

        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for &(i, j, c) in entries {
            if i >= states.len() || j >= states.len() {
                return Err(Error::invalid("couplings", format!("index ({i}, {j}) out of range")));
            }
            if i == j {
                return Err(Error::invalid("couplings", format!("self-coupling of `{}`", states[i].label)));
            }
            if !c.is_finite() {
                return Err(Error::invalid("couplings", "non-finite C3"));
            }
            sorted.push((i.min(j), i.max(j), c));
        }
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut couplings: Vec<(usize, usize, f64)> = Vec::with_capacity(sorted.len());
        for e in sorted {
            match couplings.last() {
                Some(last) if (last.0, last.1) == (e.0, e.1) => {
                    if last.2 != e.2 {
                        return Err(Error::AsymmetricCoupling {
                            a: states[e.0].label.clone(),
                            b: states[e.1].label.clone(),
                        });
                    }
                }
                _ => couplings.push(e),
            }
        }
        Ok(Self { states, couplings, r0_index })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[PairState] {
        &self.states
    }

    /// Unordered couplings `(i, j, C₃)` with `i < j`.
    pub fn couplings(&self) -> &[(usize, usize, f64)] {
        &self.couplings
    }

    pub fn r0_index(&self) -> usize {
        self.r0_index
    }

    /// Fraction of unordered state pairs that are coupled.
    pub fn coupling_density(&self) -> f64 {
        let n = self.states.len();
        if n < 2 {
            return 0.0;
        }
        self.couplings.len() as f64 / (n * (n - 1) / 2) as f64
    }

    /// Parses the CSV form; the first state row is the target pair.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut states = Vec::new();
        let mut entries = Vec::new();
        let mut index = alloc::collections::BTreeMap::new();
        let mut in_couplings = false;
        let mut saw_state_header = false;
        let mut saw_coupling_header = false;

        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let row = raw.trim();
            if row.is_empty() {
                continue;
            }
            if row.starts_with('#') {
                if row == COUPLING_MARKER {
                    in_couplings = true;
                }
                continue;
            }
            let err = |reason: String| Error::ParseError { line, reason };
            let fields: Vec<&str> = row.split(',').map(str::trim).collect();
            if !in_couplings {
                if !saw_state_header {
                    if row != STATE_HEADER {
                        return Err(err(format!("expected header `{STATE_HEADER}`")));
                    }
                    saw_state_header = true;
                    continue;
                }
                let [label, delta] = fields[..] else {
                    return Err(err(format!("expected 2 fields, found {}", fields.len())));
                };
                if label.is_empty() {
                    return Err(err("empty label".into()));
                }
                let delta: f64 = delta.parse().map_err(|_| err(format!("invalid number `{delta}`")))?;
                if index.insert(label.to_string(), states.len()).is_some() {
                    return Err(Error::DuplicateLabel(label.to_string()));
                }
                if states.is_empty() && delta != 0.0 {
                    return Err(err("target pair (first row) must have zero detuning".into()));
                }
                states.push(PairState { label: label.to_string(), delta });
            } else {
                if !saw_coupling_header {
                    if row != COUPLING_HEADER {
                        return Err(err(format!("expected header `{COUPLING_HEADER}`")));
                    }
                    saw_coupling_header = true;
                    continue;
                }
                let [a, b, c] = fields[..] else {
                    return Err(err(format!("expected 3 fields, found {}", fields.len())));
                };
                let lookup = |l: &str| index.get(l).copied().ok_or_else(|| err(format!("unknown label `{l}`")));
                let (i, j) = (lookup(a)?, lookup(b)?);
                let c: f64 = c.parse().map_err(|_| err(format!("invalid number `{c}`")))?;
                entries.push((i, j, c));
            }
        }
        if states.is_empty() {
            return Err(Error::ParseError { line: 0, reason: "no pair states".into() });
        }
        Self::new(states, &entries, 0)
    }

    /// CSV form with the target pair first; round-trips through [`parse_csv`](Self::parse_csv).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let order: Vec<usize> =
            core::iter::once(self.r0_index).chain((0..self.len()).filter(|&i| i != self.r0_index)).collect();
        let _ = writeln!(out, "{STATE_HEADER}");
        for &i in &order {
            let _ = writeln!(out, "{},{:e}", self.states[i].label, self.states[i].delta);
        }
        let _ = writeln!(out, "{COUPLING_MARKER}");
        let _ = writeln!(out, "{COUPLING_HEADER}");
        for &(i, j, c) in &self.couplings {
            let _ = writeln!(out, "{},{},{:e}", self.states[i].label, self.states[j].label, c);
        }
        out
    }
}

/// Random manifold with uniform detunings and couplings of the given RMS
/// scales, a fraction `sparsity` of state pairs left uncoupled, and the
/// target pair `r0r0` first.
pub fn synth_manifold(seed: u64, n_states: usize, detuning_scale: f64, coupling_scale: f64, sparsity: f64) -> Result<PairManifold> {
    if n_states < 1 {
        return Err(Error::invalid("n_states", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&sparsity) {
        return Err(Error::invalid("sparsity", format!("must lie in [0, 1], got {sparsity}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half_d = 3f64.sqrt() * detuning_scale;
    let half_c = 3f64.sqrt() * coupling_scale;
    let width = (n_states - 1).to_string().len();
    let mut states = Vec::with_capacity(n_states);
    states.push(PairState { label: "r0r0".into(), delta: 0.0 });
    for k in 1..n_states {
        let delta = if half_d > 0.0 { rng.random_range(-half_d..half_d) } else { 0.0 };
        states.push(PairState { label: format!("p{k:0width$}"), delta });
    }
    let mut entries = Vec::new();
    for i in 0..n_states {
        for j in i + 1..n_states {
            if rng.random::<f64>() >= sparsity {
                let c = if half_c > 0.0 { rng.random_range(-half_c..half_c) } else { 0.0 };
                entries.push((i, j, c));
            }
        }
    }
    PairManifold::new(states, &entries, 0)
}

/// Coupling of the ground pair to the symmetric single excitation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinkConvention {
    /// Ω_t/√2 on both ladder links.
    #[default]
    AsPrinted,
    /// √2·Ω_t on `gg ↔ r₀g⁺`, Ω_t/√2 on `r₀g⁺ ↔ r₀r₀`.
    Collective,
}

/// Real symmetric Hamiltonian in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingHamiltonian {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Index of `gg` and `r₀g⁺` in the mixing basis.
pub const GG: usize = 0;
pub const R0G: usize = 1;
/// Index of the first pair state.
pub const PAIR_OFFSET: usize = 2;

impl MixingHamiltonian {
    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = alloc::vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// Largest `|H_ij − H_ji|` relative to the largest entry.
    pub fn hermiticity_error(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Maximum absolute row sum, an upper bound on the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn to_operator(&self) -> Operator {
        Operator::new(self.to_dense().map(|x| C64::new(x, 0.0))).expect("square")
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[self.cols[k]] * self.vals[k];
            }
            *yi = acc;
        }
    }

    fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[self.cols[k]] * self.vals[k];
            }
            *yi = acc;
        }
    }
}

/// Two-atom Hamiltonian at separation `r` with two-photon Rabi frequency `omega_t`.
pub fn mixing_hamiltonian(manifold: &PairManifold, r: f64, omega_t: f64, link: LinkConvention) -> Result<MixingHamiltonian> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid("r", format!("must be finite and > 0, got {r}")));
    }
    let n = manifold.len() + PAIR_OFFSET;
    let first = match link {
        LinkConvention::AsPrinted => omega_t * FRAC_1_SQRT_2,
        LinkConvention::Collective => omega_t * SQRT_2,
    };
    let second = omega_t * FRAC_1_SQRT_2;
    let target = PAIR_OFFSET + manifold.r0_index;
    let r3 = r * r * r;
    let mut t = Vec::with_capacity(4 + manifold.len() + 2 * manifold.couplings.len());
    let mut link_pair = |i: usize, j: usize, v: f64| {
        if v != 0.0 {
            t.push((i, j, v));
            t.push((j, i, v));
        }
    };
    link_pair(GG, R0G, first);
    link_pair(R0G, target, second);
    for &(i, j, c3) in &manifold.couplings {
        link_pair(PAIR_OFFSET + i, PAIR_OFFSET + j, c3 / r3);
    }
    for (k, s) in manifold.states.iter().enumerate() {
        if s.delta != 0.0 {
            t.push((PAIR_OFFSET + k, PAIR_OFFSET + k, s.delta));
        }
    }
    Ok(MixingHamiltonian::from_triplets(n, t))
}

/// Populations of every basis state at the output times.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageTrace {
    pub times: Vec<f64>,
    /// `populations[t][k]` is the population of basis state `k` at `times[t]`.
    pub populations: Vec<Vec<f64>>,
    /// Maximum over time of the summed pair-state population.
    pub leakage_max: f64,
    /// Largest deviation of the norm from one.
    pub norm_drift: f64,
    /// Largest change of ⟨ψ|H|ψ⟩ from its initial value (rad/s).
    pub energy_drift: f64,
    pub final_state: Vec<C64>,
}

impl LeakageTrace {
    pub fn leakage(&self, t: usize) -> f64 {
        self.populations[t].iter().skip(PAIR_OFFSET).sum()
    }
}

/// Tolerated norm drift before [`Error::StepTooLarge`].
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

/// Per-step local error target of the step-halving control.
const STEP_TOL: f64 = 1e-11;

fn rk4_step(h: &MixingHamiltonian, psi: &[C64], dt: f64, scratch: &mut [Vec<C64>; 5]) -> Vec<C64> {
    let n = psi.len();
    let mi = C64::new(0.0, -1.0);
    let [k1, k2, k3, k4, tmp] = scratch;
    let deriv = |x: &[C64], out: &mut [C64]| {
        h.apply(x, out);
        out.iter_mut().for_each(|z| *z *= mi);
    };
    deriv(psi, k1);
    for i in 0..n {
        tmp[i] = psi[i] + k1[i] * (0.5 * dt);
    }
    deriv(tmp, k2);
    for i in 0..n {
        tmp[i] = psi[i] + k2[i] * (0.5 * dt);
    }
    deriv(tmp, k3);
    for i in 0..n {
        tmp[i] = psi[i] + k3[i] * dt;
    }
    deriv(tmp, k4);
    (0..n).map(|i| psi[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0)).collect()
}

/// Propagates `psi0` under `h` with fourth-order Runge-Kutta.
///
/// Output is recorded every `dt` up to `t_final`. Each output interval is
/// integrated with the largest step `dt/2ᵏ` for which one step and two
/// half-steps agree to the local tolerance.
pub fn evolve(h: &MixingHamiltonian, psi0: &[C64], t_final: f64, dt: f64) -> Result<LeakageTrace> {
    let n = h.dim();
    if psi0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: psi0.len() });
    }
    if !(dt > 0.0 && t_final >= 0.0) {
        return Err(Error::invalid("dt", "need dt > 0 and t_final >= 0"));
    }
    let norm0: f64 = psi0.iter().map(|z| z.norm_sqr()).sum();
    if (norm0 - 1.0).abs() > 1e-10 {
        return Err(Error::invalid("psi0", format!("state is not normalized (norm^2 = {norm0})")));
    }

    let mut scratch: [Vec<C64>; 5] = core::array::from_fn(|_| alloc::vec![C64::new(0.0, 0.0); n]);
    let mut psi = psi0.to_vec();
    let steps = (t_final / dt).round() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut populations = Vec::with_capacity(steps + 1);
    let mut hpsi = alloc::vec![C64::new(0.0, 0.0); n];
    let mut energy = |psi: &[C64]| {
        h.apply(psi, &mut hpsi);
        psi.iter().zip(&hpsi).map(|(a, b)| (a.conj() * b).re).sum::<f64>()
    };
    let e0 = energy(&psi);
    let mut energy_drift = 0.0f64;
    let record = |t: f64, psi: &[C64], times: &mut Vec<f64>, pops: &mut Vec<Vec<f64>>| {
        times.push(t);
        pops.push(psi.iter().map(|z| z.norm_sqr()).collect::<Vec<f64>>());
    };
    record(0.0, &psi, &mut times, &mut populations);

    let mut sub = 1usize;
    for s in 0..steps {
        loop {
            let h_sub = dt / sub as f64;
            let full = rk4_step(h, &psi, h_sub, &mut scratch);
            let half = rk4_step(h, &psi, 0.5 * h_sub, &mut scratch);
            let half = rk4_step(h, &half, 0.5 * h_sub, &mut scratch);
            let err = full.iter().zip(&half).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if err <= STEP_TOL || sub >= 1 << 24 {
                break;
            }
            sub *= 2;
        }
        let h_sub = dt / sub as f64;
        for _ in 0..sub {
            psi = rk4_step(h, &psi, h_sub, &mut scratch);
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_DRIFT_LIMIT {
            return Err(Error::StepTooLarge { drift: (norm - 1.0).abs() });
        }
        energy_drift = energy_drift.max((energy(&psi) - e0).abs());
        record((s + 1) as f64 * dt, &psi, &mut times, &mut populations);
    }

    let norm_drift = populations.iter().map(|p| (p.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
    let leakage_max = populations.iter().map(|p| p.iter().skip(PAIR_OFFSET).sum::<f64>()).fold(0.0, f64::max);
    Ok(LeakageTrace { times, populations, leakage_max, norm_drift, energy_drift, final_state: psi })
}

/// Spectral representation of the `gg` and `r₀g⁺` amplitudes started from `gg`.
///
/// For eigenpairs `(Eₖ, vₖ)` of a symmetric matrix containing both states,
/// `⟨a|e^{−iHt}|gg⟩ = Σₖ vₖ[a] vₖ[gg] e^{−iEₖt}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderPropagator {
    pub energies: Vec<f64>,
    /// `vₖ[gg]²`.
    pub w_gg: Vec<f64>,
    /// `vₖ[r₀g⁺]·vₖ[gg]`.
    pub w_r0g: Vec<f64>,
}

impl LadderPropagator {
    /// Dense eigendecomposition of the full Hamiltonian.
    pub fn dense(h: &MixingHamiltonian) -> Self {
        let eig = h.to_dense().symmetric_eigen();
        let n = h.dim();
        let energies = eig.eigenvalues.iter().copied().collect();
        let w_gg = (0..n).map(|k| eig.eigenvectors[(GG, k)].powi(2)).collect();
        let w_r0g = (0..n).map(|k| eig.eigenvectors[(R0G, k)] * eig.eigenvectors[(GG, k)]).collect();
        Self { energies, w_gg, w_r0g }
    }

    /// Lanczos reduction of the pair block started from `r₀r₀`.
    ///
    /// The gg ladder only couples to the pair block through `r₀r₀`, so the
    /// dynamics from `gg` lives in the span of `gg`, `r₀g⁺` and the Krylov
    /// space of `r₀r₀`. `steps` Lanczos steps without reorthogonalization
    /// produce a tridiagonal chain whose Gauss quadrature reproduces the
    /// spectral measure of `r₀r₀`; the chain is then diagonalized exactly.
    pub fn lanczos(h: &MixingHamiltonian, r0_index: usize, steps: usize) -> Self {
        let n = h.dim();
        let target = PAIR_OFFSET + r0_index;
        let np = n - PAIR_OFFSET;
        let c_first = h.get(GG, R0G);
        let c_second = h.get(R0G, target);

        // Pair block as its own operator: rows/cols >= PAIR_OFFSET.
        let mut q_prev = alloc::vec![0.0; n];
        let mut q = alloc::vec![0.0; n];
        q[target] = 1.0;
        let mut w = alloc::vec![0.0; n];
        let mut alpha = Vec::with_capacity(steps);
        let mut beta: Vec<f64> = Vec::with_capacity(steps);
        let scale = h.norm_inf().max(1.0);
        let mut b_prev = 0.0;
        for _ in 0..steps.max(1) {
            h.apply_real(&q, &mut w);
            w[GG] = 0.0;
            w[R0G] = 0.0;
            let a: f64 = w.iter().zip(&q).map(|(x, y)| x * y).sum();
            for i in PAIR_OFFSET..n {
                w[i] -= a * q[i] + b_prev * q_prev[i];
            }
            alpha.push(a);
            let b = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if b <= 1e-14 * scale || np == 1 {
                break;
            }
            beta.push(b);
            core::mem::swap(&mut q_prev, &mut q);
            for i in 0..n {
                q[i] = w[i] / b;
            }
            b_prev = b;
        }
        beta.truncate(alpha.len() - 1);

        // Chain: gg, r0g+, Lanczos vectors.
        let m = alpha.len() + 2;
        let mut d = alloc::vec![0.0; m];
        let mut e = alloc::vec![0.0; m];
        d[2..].copy_from_slice(&alpha);
        e[0] = c_first;
        e[1] = c_second;
        e[2..2 + beta.len()].copy_from_slice(&beta);
        let rows = tridiagonal_eigen(&mut d, &mut e);
        Self {
            w_gg: rows[0].iter().map(|x| x * x).collect(),
            w_r0g: rows[0].iter().zip(&rows[1]).map(|(a, b)| a * b).collect(),
            energies: d,
        }
    }

    /// Summed pair-state population `1 − |c_gg|² − |c_r₀g⁺|²` at time `t`.
    pub fn leakage(&self, t: f64) -> f64 {
        let (mut gg, mut rg) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for k in 0..self.energies.len() {
            let ph = C64::from_polar(1.0, -self.energies[k] * t);
            gg += ph * self.w_gg[k];
            rg += ph * self.w_r0g[k];
        }
        (1.0 - gg.norm_sqr() - rg.norm_sqr()).clamp(0.0, 1.0)
    }
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e[i] = T[i, i+1]` (implicit QL with Wilkinson shifts).
///
/// On return `d` holds the eigenvalues; the first two rows of the
/// eigenvector matrix are returned.
fn tridiagonal_eigen(d: &mut [f64], e: &mut [f64]) -> [Vec<f64>; 2] {
    let n = d.len();
    let mut z0 = alloc::vec![0.0; n];
    let mut z1 = alloc::vec![0.0; n];
    z0[0] = 1.0;
    if n > 1 {
        z1[1] = 1.0;
    }
    if n > 0 {
        e[n - 1] = 0.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for z in [&mut z0, &mut z1] {
                    f = z[i + 1];
                    z[i + 1] = s * z[i] + c * f;
                    z[i] = c * z[i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    [z0, z1]
}

/// Options of a leakage scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub omega_t: f64,
    pub link: LinkConvention,
    /// Window length in effective Rabi periods 2π/Ω_t.
    pub periods: f64,
    /// Output samples per Rabi period.
    pub samples_per_period: usize,
    /// Lanczos steps as a multiple of the manifold size (large manifolds).
    pub lanczos_factor: f64,
}

impl ScanOptions {
    pub fn new(omega_t: f64) -> Self {
        Self { omega_t, link: LinkConvention::AsPrinted, periods: 10.0, samples_per_period: 64, lanczos_factor: 2.0 }
    }

    pub fn sample_times(&self) -> Vec<f64> {
        let period = TAU / self.omega_t;
        let n = (self.periods * self.samples_per_period as f64).ceil() as usize;
        linspace(0.0, self.periods * period, n + 1)
    }
}

/// Propagator for one distance: dense below [`DENSE_LIMIT`] states, Lanczos above.
pub fn ladder_propagator(manifold: &PairManifold, r: f64, opts: &ScanOptions) -> Result<LadderPropagator> {
    let h = mixing_hamiltonian(manifold, r, opts.omega_t, opts.link)?;
    Ok(if manifold.len() < DENSE_LIMIT {
        LadderPropagator::dense(&h)
    } else {
        let steps = (opts.lanczos_factor * manifold.len() as f64).ceil() as usize;
        LadderPropagator::lanczos(&h, manifold.r0_index(), steps)
    })
}

/// Maximum pair-state population over the window at one distance.
pub fn leakage_at(manifold: &PairManifold, r: f64, opts: &ScanOptions) -> Result<f64> {
    let prop = ladder_propagator(manifold, r, opts)?;
    Ok(opts.sample_times().into_iter().map(|t| prop.leakage(t)).fold(0.0, f64::max))
}

/// `(r, leakage_max)` for each distance.
pub fn leakage_scan(manifold: &PairManifold, opts: &ScanOptions, r_values: &[f64]) -> Result<Vec<(f64, f64)>> {
    r_values.iter().map(|&r| Ok((r, leakage_at(manifold, r, opts)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_state_manifold_is_a_ladder() {
        let m = PairManifold::parse_csv("label,delta_rad_per_s\nr0r0,0\n").unwrap();
        assert_eq!(m.len(), 1);
        let h = mixing_hamiltonian(&m, 1e-6, 2.0, LinkConvention::AsPrinted).unwrap();
        assert_eq!(h.dim(), 3);
        assert!((h.get(GG, R0G) - SQRT_2).abs() < 1e-15);
        assert!((h.get(R0G, 2) - SQRT_2).abs() < 1e-15);
        let h = mixing_hamiltonian(&m, 1e-6, 2.0, LinkConvention::Collective).unwrap();
        assert!((h.get(GG, R0G) - 2.0 * SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_and_duplicate_rejected() {
        let text = "label,delta_rad_per_s\nr0r0,0\na,1\n# couplings\nlabel_i,label_j,c3_rad_per_s_m3\nr0r0,a,2\na,r0r0,3\n";
        assert!(matches!(PairManifold::parse_csv(text), Err(Error::AsymmetricCoupling { .. })));
        let dup = "label,delta_rad_per_s\nr0r0,0\na,1\na,2\n";
        assert_eq!(PairManifold::parse_csv(dup), Err(Error::DuplicateLabel("a".into())));
        let bad = "label,delta_rad_per_s\nr0r0,0\na,x\n";
        assert!(matches!(PairManifold::parse_csv(bad), Err(Error::ParseError { line: 3, .. })));
    }

    #[test]
    fn csv_round_trip() {
        let m = synth_manifold(7, 40, 1e9, 1e-10, 0.8).unwrap();
        let text = m.to_csv();
        let back = PairManifold::parse_csv(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_csv(), text);
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let d0 = [1.0, -2.0, 3.5, 0.25, 4.0];
        let e0 = [0.5, 1.5, -0.7, 2.0];
        let dense = DMatrix::from_fn(5, 5, |i, j| {
            if i == j {
                d0[i]
            } else if i + 1 == j {
                e0[i]
            } else if j + 1 == i {
                e0[j]
            } else {
                0.0
            }
        });
        let mut d = d0.to_vec();
        let mut e = e0.to_vec();
        e.push(0.0);
        let [z0, z1] = tridiagonal_eigen(&mut d, &mut e);
        let eig = dense.symmetric_eigen();
        for k in 0..5 {
            let j = (0..5).min_by(|&a, &b| (eig.eigenvalues[a] - d[k]).abs().total_cmp(&(eig.eigenvalues[b] - d[k]).abs())).unwrap();
            assert!((eig.eigenvalues[j] - d[k]).abs() < 1e-12);
            let prod = eig.eigenvectors[(0, j)] * eig.eigenvectors[(1, j)];
            assert!((prod - z0[k] * z1[k]).abs() < 1e-12);
            assert!((eig.eigenvectors[(0, j)].powi(2) - z0[k].powi(2)).abs() < 1e-12);
        }
    }
}
