//! Values frozen from independent 30-digit evaluations (mpmath).

#![allow(clippy::excessive_precision)]

use std::f64::consts::TAU;

use approx::assert_relative_eq;
use specreg::heat_expansion::analytic_expansion;
use specreg::orbit::{log_Vol_reg, log_vol_reg, orbit_spectrum};
use specreg::regdet::log_Det_reg;
use specreg::special::{exp_integral_e1, gamma_fn, hurwitz_zeta, ln_gamma};
use specreg::spectra::lattice_family;
use specreg::zeta::{verify_bridge, zeta_prime0, zeta_prime0_closed_form};
use specreg::{LatticeSide, LoopGroupOrbitSpec, EULER_GAMMA};

#[test]
fn exponential_integral() {
    assert_relative_eq!(
        exp_integral_e1(0.5).unwrap(),
        0.559_773_594_776_160_8,
        max_relative = 1e-14
    );
    assert_relative_eq!(
        exp_integral_e1(3.0).unwrap(),
        0.013_048_381_094_197_037,
        max_relative = 1e-14
    );
    assert_relative_eq!(
        exp_integral_e1(20.0).unwrap(),
        9.835_525_290_649_882e-11,
        max_relative = 1e-13
    );
}

#[test]
fn gamma_values() {
    assert_relative_eq!(
        gamma_fn(4.5).unwrap(),
        11.631_728_396_567_449,
        max_relative = 1e-13
    );
    assert_relative_eq!(
        ln_gamma(30.2).unwrap(),
        71.934_602_968_394_99,
        max_relative = 1e-14
    );
}

#[test]
fn hurwitz_value() {
    assert_relative_eq!(
        hurwitz_zeta(3.0, 0.3).unwrap(),
        37.636_268_294_363_02,
        max_relative = 1e-13
    );
}

#[test]
fn generic_one_sided_lattice() {
    // ζ′(0) for (2πn + 0.7)², n ≥ 1.
    let expected = 0.300_282_075_773_467_1;
    let spec = lattice_family(TAU, 0.7, LatticeSide::Positive, 1, 0.0).unwrap();
    let exp = analytic_expansion(&spec, true).unwrap();
    assert!((zeta_prime0(&spec, &exp).unwrap().value - expected).abs() < 1e-10);
    assert!((zeta_prime0_closed_form(&spec).unwrap() - expected).abs() < 1e-10);
    assert!((log_Det_reg(&spec, &exp).unwrap().value + expected).abs() < 1e-10);
    assert!(verify_bridge(&spec, &exp).unwrap().passed);
}

#[test]
fn su2_orbit_volume() {
    // Primed orbit of SU(2) at s = 0.25: ζ′(0) and b₀′ = -3.
    let zeta_prime = 0.010_422_097_402_493_144;
    let orbit = LoopGroupOrbitSpec::new(1, vec![vec![1.0]], vec![1.0], 0.25).unwrap();
    let spec = orbit_spectrum(&orbit, true).unwrap();
    let exp = analytic_expansion(&spec, true).unwrap();
    assert_eq!(exp.b0_primed(), -3.0);
    assert!((zeta_prime0(&spec, &exp).unwrap().value - zeta_prime).abs() < 1e-10);
    let big = log_Vol_reg(&orbit).unwrap().value;
    let small = log_vol_reg(&orbit).unwrap().value;
    assert!((big + 0.5 * zeta_prime).abs() < 1e-10);
    assert!((big - small - 1.5 * EULER_GAMMA).abs() < 1e-10);
}

#[test]
fn orbit_volume_moves_with_s() {
    // log vol_reg(s) = ½(-ζ′(0) - 3γ), from Hurwitz zeta at s = 0.1, 0.3, 0.5.
    let cases = [
        (0.1, -0.866_656_900_141_102_1),
        (0.3, -0.873_329_130_401_598_5),
        (0.5, -0.886_700_406_508_098),
    ];
    let base = LoopGroupOrbitSpec::new(1, vec![vec![1.0]], vec![1.0], 0.0).unwrap();
    for (s, expected) in cases {
        let v = log_vol_reg(&base.at(s)).unwrap().value;
        assert!((v - expected).abs() < 1e-10, "s={s}: {v}");
    }
}

#[test]
fn riemann_lattice_left_of_zero() {
    // (2π)^{-2s} ζ_R(2s) for (2πn)², n ≥ 1.
    let spec = lattice_family(TAU, 0.0, LatticeSide::Positive, 1, 0.0).unwrap();
    let exp = analytic_expansion(&spec, true).unwrap();
    for (s, expected) in [
        (-1.5, 2.067_085_112_019_99),
        (-1.75, 2.761_286_190_466_74),
        (-0.9, -0.205_641_640_401_728),
    ] {
        let z = specreg::zeta::zeta_value(&spec, &exp, s).unwrap();
        assert!(
            (z.value - expected).abs() < 1e-9 * expected.abs(),
            "s={s}: {}",
            z.value
        );
    }
}
