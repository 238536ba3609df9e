mod common;

use std::f64::consts::PI;

use common::{node_resonant, rel, TWO_PI};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rydlat_core::lattice::*;
use rydlat_core::math::{linspace, slope};
use rydlat_core::quantum::DensityMatrix;
use rydlat_core::units::hz_to_angular;
use rydlat_core::Error;

fn sw_1d(theta: f64) -> StandingWave {
    StandingWave { omega2c: 3.0, omega2sw: 1.0, k: TWO_PI / 318e-9, theta, dims: Dimensionality::One }
}

#[test]
fn rabi_profile_nodes_and_antinodes() {
    let sw = sw_1d(PI);
    assert_eq!(rabi_profile(&sw, 0.0), 3.0);
    assert!((rabi_profile(&sw, 318e-9 / 4.0) - 4.0).abs() < 1e-12);
    // θ = π/2: k x sin(π/4) = π/2 at x = λ/(4 sin(π/4)).
    let sw = sw_1d(PI / 2.0);
    let x = 318e-9 / (4.0 * (PI / 4.0).sin());
    assert!((rabi_profile(&sw, x) - 4.0).abs() < 1e-12);
}

#[test]
fn rabi_profile_is_periodic() {
    let sw = sw_1d(2.0 * PI / 3.0);
    let period = PI / (sw.k * (sw.theta / 2.0).sin());
    for x in linspace(-3e-7, 3e-7, 37) {
        assert!((sw.rabi(x + period) - sw.rabi(x)).abs() <= 1e-12 * sw.rabi(x));
        assert!(sw.rabi(x) >= sw.omega2c);
    }
}

#[test]
fn analytic_peak_value_at_symmetric_resonance() {
    let p = node_resonant();
    let d = p.delta;
    let u = potential_analytic(&p, 2.0 * d, 2.0 * d);
    // a = b = 4Δ², S = 8Δ² reduces the closed form to Ω₁⁴/(4Δγₚ²).
    let expect = p.omega1.powi(4) / (4.0 * d * p.gamma_p * p.gamma_p);
    assert!(rel(u, expect) < 1e-12);
    let lp = lorentzian_params(&p, &p.standing_wave(Dimensionality::One));
    assert!(rel(lp.u0_closed_form, expect) < 1e-12);
    assert!(rel(lp.u0, expect / 2.0) < 1e-12);
}

#[test]
fn analytic_symmetry_and_oddness() {
    let p = node_resonant();
    let d = p.delta;
    for (a, b) in [(1.3, 2.2), (2.0, 2.0), (2.5, 1.7)] {
        let u = potential_analytic(&p, a * d, b * d);
        assert_eq!(u, potential_analytic(&p, b * d, a * d));
        assert_eq!(u, -potential_analytic(&p.with_delta(-d), a * d, b * d));
    }
}

#[test]
fn analytic_peak_sits_on_resonance() {
    let p = node_resonant();
    let d = p.delta;
    let o2 = linspace(1.9 * d, 2.1 * d, 4001);
    let step = o2[1] - o2[0];
    let ipk = (0..o2.len())
        .max_by(|&i, &j| potential_analytic(&p, 2.0 * d, o2[i]).abs().total_cmp(&potential_analytic(&p, 2.0 * d, o2[j]).abs()))
        .unwrap();
    let resonant = (8.0 * d * d - 4.0 * d * d).sqrt();
    assert!((o2[ipk] - resonant).abs() <= step);
}

#[test]
fn numeric_matches_analytic_at_node_pair() {
    let p = node_resonant();
    let d = p.delta;
    let n = potential_numeric_at(&p, 2.0 * d, 2.0 * d, p.v_max()).unwrap();
    let a = potential_analytic(&p, 2.0 * d, 2.0 * d);
    assert!(rel(n.u, a) < 0.05, "numeric {} analytic {a}", n.u);
    assert_eq!(n.pair_energy, 2.0 * n.u);
}

#[test]
fn numeric_vanishes_without_drive_and_far_apart() {
    let mut p = node_resonant();
    let sw = p.standing_wave(Dimensionality::One);
    p.omega1 = 1e-12;
    let n = potential_numeric_at(&p, p.omega2c, p.omega2c, p.v_max()).unwrap();
    assert!(n.u.abs() < 1e-30);

    let mut p = node_resonant();
    p.c6 = Some(hz_to_angular(5e-23));
    let rc = soft_core_radius(&p).unwrap();
    let near = potential_numeric(&p, 0.0, sw.node(1), &sw).unwrap().u;
    let far_x = sw.node((20.0 * rc / sw.period()).round() as i64);
    let far = potential_numeric(&p, 0.0, far_x, &sw).unwrap().u;
    assert!(far.abs() < 1e-3 * near.abs(), "far {far} near {near}");
}

#[test]
fn numeric_sign_flips_with_detuning() {
    let p = node_resonant();
    let d = p.delta;
    for o2 in [1.5 * d, 2.0 * d, 2.6 * d] {
        let up = potential_numeric_at(&p, 2.0 * d, o2, p.v_max()).unwrap().u;
        let um = potential_numeric_at(&p.with_delta(-d), 2.0 * d, o2, p.v_max()).unwrap().u;
        assert!((up + um).abs() <= 1e-3 * up.abs(), "{o2}: {up} {um}");
    }
}

#[test]
fn lorentzian_width_and_depth_scaling() {
    let p = node_resonant();
    let mut sw = p.standing_wave(Dimensionality::One);
    sw.omega2sw = hz_to_angular(1.7e6);
    let lp = lorentzian_params(&p, &sw);
    let expect = 2.0 * p.gamma_p / (TWO_PI / 318e-9 * sw.omega2sw);
    assert!(rel(lp.w, expect) < 1e-14);
    // Around 4.5 Å: the scale of an atomic radius.
    assert!(lp.w > 1e-10 && lp.w < 1e-9, "{}", lp.w);

    let half = StandingWave { omega2sw: 0.5 * sw.omega2sw, ..sw };
    assert!(rel(lorentzian_params(&p, &half).w, 2.0 * lp.w) < 1e-14);
    let strong = p.with_omega1(2.0 * p.omega1);
    assert!(rel(lorentzian_params(&strong, &sw).u0, 16.0 * lp.u0) < 1e-12);

    assert_eq!(lorentzian_profile(2.0, 1e-9, 5e-9, 5e-9), 2.0);
    assert!((lorentzian_profile(2.0, 1e-9, 5e-9, 6e-9) - 1.0).abs() < 1e-15);
}

#[test]
fn fit_recovers_exact_lorentzian() {
    let (u0, w, xj) = (3.7, 2e-9, 1.6e-7);
    let s: Vec<(f64, f64)> = linspace(xj - 4.0 * w, xj + 4.0 * w, 33).into_iter().map(|x| (x, lorentzian_profile(u0, w, xj, x))).collect();
    let f = fit_lorentzian(&s).unwrap();
    assert!(rel(f.u0, u0) < 1e-9 && rel(f.w, w) < 1e-9);
    assert!((f.x0 - xj).abs() < 1e-9 * w);
}

#[test]
fn fit_tolerates_one_percent_noise() {
    let (u0, w, xj): (f64, f64, f64) = (-2.0, 5e-10, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // Uniform noise with standard deviation 1% of the peak.
    let a = 0.01 * u0.abs() * 3f64.sqrt();
    let s: Vec<(f64, f64)> = linspace(-4.0 * w, 4.0 * w, 81)
        .into_iter()
        .map(|x| (x, lorentzian_profile(u0, w, xj, x) + rng.random_range(-a..a)))
        .collect();
    let f = fit_lorentzian(&s).unwrap();
    assert!(rel(f.u0, u0) < 0.05 && rel(f.w, w) < 0.05, "{f:?}");
}

#[test]
fn fit_rejects_degenerate_input() {
    let flat: Vec<(f64, f64)> = (0..9).map(|i| (i as f64, 1.0)).collect();
    assert!(matches!(fit_lorentzian(&flat), Err(Error::FitDiverged { .. })));
    assert!(matches!(fit_lorentzian(&flat[..5]), Err(Error::InsufficientSamples { .. })));
}

#[test]
fn resonance_surface_zero_and_minimum() {
    let p = node_resonant();
    let d = p.delta;
    let sw = p.standing_wave(Dimensionality::One);
    let a = sw.node(1);
    let xs = linspace(-2e-8, 2e-8, 41);
    let x2: Vec<f64> = xs.iter().map(|x| x + a).collect();
    let u = resonance_surface(&sw, d, p.gamma_p, &xs, &x2);
    assert!(u.values[(20, 20)].abs() < 1e-6 * 8.0 * d * d / p.gamma_p);

    let low = StandingWave { omega2c: 1.6 * d, ..sw };
    let u = resonance_surface(&low, d, p.gamma_p, &xs, &x2);
    let min = u.values.iter().copied().fold(f64::INFINITY, f64::min);
    let expect = -(8.0 * d * d - 2.0 * low.omega2c * low.omega2c) / p.gamma_p;
    assert!(rel(min, expect) < 1e-12);
    assert_eq!(u.values[(20, 20)], min);
}

#[test]
fn resonance_zero_contour_is_a_diamond() {
    let p = node_resonant();
    let d = p.delta;
    let sw = StandingWave { omega2c: 2.0 * d - 10.0 * p.gamma_p, ..p.standing_wave(Dimensionality::One) };
    let f = |s1: f64, s2: f64| resonance_value(d, p.gamma_p, sw.rabi(s1), sw.rabi(s2));
    let root = |g: &dyn Fn(f64) -> f64| {
        let (mut lo, mut hi) = (0.0, 5e-8);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        lo
    };
    let axis = root(&|s| f(s, 0.0));
    let diag = root(&|s| f(s, s));
    // |δ₁| + |δ₂| = const: the diagonal crossing sits at half the axis crossing.
    assert!(rel(diag, 0.5 * axis) < 0.01, "axis {axis:e} diag {diag:e}");
}

#[test]
fn soft_core_radius_scaling_and_definition() {
    let mut p = node_resonant();
    assert_eq!(soft_core_radius(&p), Err(Error::MissingC6));
    p.c6 = Some(hz_to_angular(5e-23));
    let rc = soft_core_radius(&p).unwrap();
    let mut p64 = p;
    p64.c6 = Some(64.0 * p.c6.unwrap());
    assert!(rel(soft_core_radius(&p64).unwrap(), 2.0 * rc) < 1e-14);
    let lhs = p.rydberg_fraction() * p.c6.unwrap() / rc.powi(6);
    assert!(rel(lhs, p.omega1 * p.omega2c / (2.0 * p.delta.abs())) < 1e-12);
}

#[test]
fn collective_site_counts() {
    let a = 1.0;
    assert_eq!(sites_within(a, 0.9, Dimensionality::One), 0);
    assert_eq!(collective_depth(3.0, a, 0.9, Dimensionality::Three), 0.0);
    assert_eq!(sites_within(a, 5.2, Dimensionality::One), 10);
    // Shells with i² + j² + k² = 1..6 hold 6, 12, 8, 6, 24, 24 points.
    assert_eq!(sites_within(a, 2.5, Dimensionality::Three), 80);
    assert_eq!(collective_depth(2.0, a, 5.2, Dimensionality::One), 20.0);
}

#[test]
fn loss_of_ground_pair_is_zero() {
    let p = node_resonant();
    assert_eq!(loss_rate(&p, &DensityMatrix::basis(9, 0)).unwrap(), 0.0);
}

#[test]
fn loss_scales_as_fourth_power_of_drive() {
    let p = node_resonant();
    let d = p.delta;
    let w1: Vec<f64> = [0.25, 0.5, 1.0, 2.0].iter().map(|f| f * p.omega1).collect();
    let loss: Vec<f64> = w1
        .iter()
        .map(|&w| potential_numeric_at(&p.with_omega1(w), 2.0 * d, 2.0 * d, p.v_max()).unwrap().loss)
        .collect();
    let lx: Vec<f64> = w1.iter().map(|w| w.ln()).collect();
    let ly: Vec<f64> = loss.iter().map(|l| l.ln()).collect();
    let s = slope(&lx, &ly);
    assert!((s - 4.0).abs() < 0.1, "slope {s}");
}

#[test]
fn numeric_peak_sits_on_zero_resonance_offset() {
    let p = node_resonant();
    let d = p.delta;
    let o2 = linspace(1.95 * d, 2.05 * d, 201);
    let step = o2[1] - o2[0];
    let u: Vec<f64> = o2.iter().map(|&o| potential_numeric_at(&p, 2.0 * d, o, p.v_max()).unwrap().u.abs()).collect();
    let ipk = (0..u.len()).max_by(|&i, &j| u[i].total_cmp(&u[j])).unwrap();
    let zero = o2
        .iter()
        .copied()
        .min_by(|a, b| {
            let f = |o: f64| rydlat_core::spectrum::resonance_offset(d, 2.0 * d, o, p.gamma_p).abs();
            f(*a).total_cmp(&f(*b))
        })
        .unwrap();
    assert!((o2[ipk] - zero).abs() <= step, "peak {} zero {}", o2[ipk] / d, zero / d);
}
