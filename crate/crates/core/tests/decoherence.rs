mod common;

use common::{node_resonant, rel};
use rydlat_core::decoherence::*;
use rydlat_core::math::slope;
use rydlat_core::units::hz_to_angular;
use rydlat_core::Error;

#[test]
fn bbr_rates_and_budget() {
    assert_eq!(bbr_rate(300.0), Ok(1960.0));
    assert_eq!(bbr_rate(77.0), Ok(500.0));
    assert_eq!(bbr_rate(3.0), Ok(17.0));
    assert_eq!(bbr_rate(4.0), Err(Error::UnknownTemperature(4.0)));

    let b = bbr_budget_from_population(1.0, 300.0, DEFAULT_SURVIVAL_THRESHOLD).unwrap();
    assert_eq!(b.tau_max, -(0.82f64).ln() / 1960.0);
    assert!((b.survival(b.tau_max) - 0.82).abs() < 1e-15);
    assert!(b.survival(2.0 * b.tau_max) < 0.82);

    let t77 = bbr_budget_from_population(1.0, 77.0, 0.82).unwrap().tau_max;
    assert!(rel(b.tau_max / t77, 500.0 / 1960.0) < 1e-15);
}

#[test]
fn bbr_population_from_site_count() {
    let (o1, o2) = (1.0, 50.0);
    let b = bbr_budget(100, o1, o2, 3.0, 0.82).unwrap();
    assert!(rel(b.p_r, 100.0 / 2500.0) < 1e-15);
    assert!(matches!(bbr_budget(0, o1, o2, 3.0, 0.82), Err(Error::InvalidParameter { .. })));
    assert!(bbr_budget_from_population(1.0, 3.0, 1.0).is_err());
}

#[test]
fn calibration_hits_target() {
    let p = node_resonant();
    let c = calibrate_omega1(&p, 1.0).unwrap();
    assert!((c.loss - 1.0).abs() < 1e-6, "{c:?}");
    // Loss follows γₚU₀/Δ at the centre.
    assert!(rel(c.loss, c.loss_shortcut) < 0.05, "{c:?}");
}

#[test]
fn calibrated_drive_scales_as_fourth_root_of_target() {
    let p = node_resonant();
    let targets = [0.25, 0.5, 1.0, 2.0, 4.0];
    let o1: Vec<f64> = targets.iter().map(|&t| calibrate_omega1(&p, t).unwrap().omega1.ln()).collect();
    let lt: Vec<f64> = targets.iter().map(|t| t.ln()).collect();
    let s = slope(&lt, &o1);
    assert!((s - 0.25).abs() < 0.01, "slope {s}");
}

#[test]
fn scan_keeps_the_node_resonance() {
    let p = node_resonant();
    let o2c: Vec<f64> = [2e6, 10e6, 50e6].iter().map(|&f| hz_to_angular(f)).collect();
    let scan = calibration_scan(&p, &o2c, 1.0).unwrap();
    for s in &scan {
        assert_eq!(s.delta, 0.5 * s.omega2c);
        assert!((s.calibration.loss - 1.0).abs() < 1e-6);
    }
    // Larger detuning needs stronger probe for the same loss.
    assert!(scan.windows(2).all(|w| w[1].calibration.omega1 > w[0].calibration.omega1));
}
