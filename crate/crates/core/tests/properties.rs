mod common;

use common::unit_params;
use nalgebra::Schur;
use proptest::prelude::*;
use rydlat_core::blockade::*;
use rydlat_core::lattice::{potential_analytic, rabi_profile, Dimensionality, StandingWave};
use rydlat_core::quantum::{liouvillian, pair_hamiltonian, steady_state, Operator};
use rydlat_core::spectrum::{s3_asymptotic, s3_spectrum};
use rydlat_core::{DressingParams, C64};

/// Pair parameters in units of γₚ spanning three decades in Ω₁/Ω₂c and v/Δ.
fn pair_draw() -> impl Strategy<Value = (DressingParams, f64, f64, f64)> {
    (0.5f64..20.0, any::<bool>(), -3.0f64..0.0, 0.5f64..4.0, 1.0f64..1.5, -1.0f64..2.0, 0.001f64..0.5).prop_map(
        |(d, neg, log_ratio, o2c_over_d, o2_ratio, log_v, ge)| {
            let delta = if neg { -d } else { d };
            let o2c = o2c_over_d * d;
            let p = unit_params(10f64.powf(log_ratio) * o2c, o2c, delta, ge);
            (p, o2c, o2_ratio * o2c, 10f64.powf(log_v) * d)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steady_state_is_a_valid_density_matrix((p, o2a, o2b, v) in pair_draw()) {
        let l = liouvillian(&pair_hamiltonian(&p, o2a, o2b, v), &p).unwrap();
        let rho = steady_state(&l).unwrap();
        let val = rho.validity();
        prop_assert!(val.is_valid(), "{val:?}");
        let residual = l.apply(rho.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(residual <= 1e-10 * l.norm_inf());
    }

    #[test]
    fn swapping_the_atoms_permutes_the_steady_state((p, o2a, o2b, v) in pair_draw()) {
        let ss = |a: f64, b: f64| steady_state(&liouvillian(&pair_hamiltonian(&p, a, b, v), &p).unwrap()).unwrap();
        let swap = Operator::swap();
        let direct = ss(o2a, o2b).conjugate_by(&swap);
        let swapped = ss(o2b, o2a);
        let err = (direct.matrix() - swapped.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-9, "{err:e}");
    }

    #[test]
    fn generator_has_no_growing_modes((p, o2a, o2b, v) in pair_draw()) {
        let l = liouvillian(&pair_hamiltonian(&p, o2a, o2b, v), &p).unwrap();
        let eig = Schur::new(l.matrix().clone()).eigenvalues().unwrap();
        let top = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(top <= 1e-10 * l.norm_inf().max(1.0), "{top:e}");
    }

    #[test]
    fn strong_interaction_spectrum_matches_asymptotic(
        d in 0.1f64..10.0, neg in any::<bool>(), a in 0.0f64..4.0, b in 0.0f64..4.0,
    ) {
        let delta = if neg { -d } else { d };
        let (a, b) = (a * d, b * d);
        let num = s3_spectrum(delta, a, b, 1e6 * d);
        let asym = s3_asymptotic(delta, a, b);
        for i in 0..3 {
            let tol = (1e-3 * asym.energies[i].abs()).max(1e-6 * d);
            prop_assert!((num.energies[i] - asym.energies[i]).abs() <= tol);
        }
    }

    #[test]
    fn analytic_form_is_swap_symmetric_and_odd_in_detuning(
        d in 1.0f64..100.0, a in 0.5f64..3.0, b in 0.5f64..3.0, o1 in 0.01f64..1.0,
    ) {
        let p = unit_params(o1, 2.0 * d, d, 0.0);
        let u = potential_analytic(&p, a * d, b * d);
        prop_assert_eq!(u, potential_analytic(&p, b * d, a * d));
        prop_assert_eq!(u, -potential_analytic(&p.with_delta(-d), a * d, b * d));
    }

    #[test]
    fn rabi_profile_never_drops_below_the_offset(
        o2c in 0.0f64..10.0, o2sw in 0.0f64..10.0, theta in 0.1f64..3.14, x in -1e-6f64..1e-6,
    ) {
        let sw = StandingWave { omega2c: o2c, omega2sw: o2sw, k: 2e7, theta, dims: Dimensionality::One };
        let o = rabi_profile(&sw, x);
        prop_assert!(o >= o2c && o <= o2c + o2sw);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn leakage_is_invariant_under_energy_rescaling(
        seed in any::<u64>(), n in 3usize..30, s in 0.1f64..10.0, omega in 0.2f64..2.0,
    ) {
        let m = synth_manifold(seed, n, 2.0, 1.0, 0.5).unwrap();
        let scaled_states: Vec<PairState> =
            m.states().iter().map(|st| PairState { label: st.label.clone(), delta: s * st.delta }).collect();
        let scaled = PairManifold::new(scaled_states, m.couplings(), m.r0_index()).unwrap();
        // C₃/R³ → s·C₃/R³ through R → R·s^(−1/3).
        let r = 1.3;
        let a = LadderPropagator::dense(&mixing_hamiltonian(&m, r, omega, LinkConvention::AsPrinted).unwrap());
        let b = LadderPropagator::dense(&mixing_hamiltonian(&scaled, r * s.powf(-1.0 / 3.0), s * omega, LinkConvention::AsPrinted).unwrap());
        for t in [0.3, 1.7, 6.0] {
            prop_assert!((a.leakage(t) - b.leakage(t / s)).abs() < 1e-9);
        }
    }

    #[test]
    fn propagation_conserves_norm_and_energy(seed in any::<u64>(), n in 3usize..40, omega in 0.2f64..2.0) {
        let m = synth_manifold(seed, n, 2.0, 1.0, 0.5).unwrap();
        let h = mixing_hamiltonian(&m, 1.0, omega, LinkConvention::Collective).unwrap();
        let mut psi0 = vec![C64::new(0.0, 0.0); h.dim()];
        psi0[GG] = C64::new(0.6, 0.0);
        psi0[R0G] = C64::new(0.0, 0.8);
        let trace = evolve(&h, &psi0, 5.0, 0.5).unwrap();
        prop_assert!(trace.norm_drift <= 1e-8, "{:e}", trace.norm_drift);
        prop_assert!(trace.energy_drift <= 1e-8 * h.norm_inf(), "{:e}", trace.energy_drift);
    }
}
