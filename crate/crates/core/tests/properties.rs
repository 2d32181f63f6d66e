use proptest::prelude::*;
use specreg::heat_expansion::exact_expansion;
use specreg::orbit::{orbit_spectrum, trace_shape_eps};
use specreg::regdet::{log_Det_reg, log_det_eps, log_det_reg};
use specreg::spectra::{finite_spectrum, lattice_family};
use specreg::zeta::{dirichlet_series, verify_bridge, zeta_value};
use specreg::{LatticeSide, LoopGroupOrbitSpec, Spectrum, Tolerance};

fn modes() -> impl Strategy<Value = Vec<(f64, u32, f64)>> {
    prop::collection::vec((0.1f64..20.0, 1u32..4), 1..6)
        .prop_map(|v| v.into_iter().map(|(l, m)| (l, m, 0.0)).collect())
}

fn finite() -> impl Strategy<Value = Spectrum> {
    modes().prop_map(|m| finite_spectrum(&m).unwrap())
}

fn with_kernel() -> impl Strategy<Value = Spectrum> {
    (modes(), 0u32..4).prop_map(|(mut m, k)| {
        if k > 0 {
            m.push((0.0, k, 0.0));
        }
        finite_spectrum(&m).unwrap()
    })
}

fn lattice() -> impl Strategy<Value = Spectrum> {
    (1.0f64..8.0, -3.0f64..3.0, any::<bool>(), 1u32..3).prop_map(|(c, theta, full, m)| {
        let side = if full {
            LatticeSide::Full
        } else {
            LatticeSide::Positive
        };
        lattice_family(c, theta, side, m, 0.0).unwrap()
    })
}

fn any_spectrum() -> impl Strategy<Value = Spectrum> {
    prop_oneof![
        finite(),
        lattice(),
        (lattice(), finite()).prop_map(|(a, b)| a.direct_sum(&b))
    ]
}

fn orbit() -> impl Strategy<Value = LoopGroupOrbitSpec> {
    (1usize..4)
        .prop_flat_map(|r| {
            (
                Just(r),
                prop::collection::vec(prop::collection::vec(-1.5f64..1.5, r), 1..4),
                prop::collection::vec(-1.0f64..1.0, r),
                0.0f64..0.5,
            )
        })
        .prop_map(|(r, roots, x, s)| LoopGroupOrbitSpec::new(r, roots, x, s).unwrap())
}

fn tol() -> Tolerance {
    Tolerance::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn heat_trace_is_decreasing_and_log_convex(spec in any_spectrum(), t in 1e-3f64..0.5, h in 1e-3f64..0.2) {
        let tr = |t: f64| spec.heat_trace(t, tol(), false).unwrap();
        let (a, b, c) = (tr(t), tr(t + h), tr(t + 2.0 * h));
        prop_assert!(a >= b && b >= c);
        prop_assert!(b.ln() <= 0.5 * (a.ln() + c.ln()) + 1e-12 * b.ln().abs().max(1.0));
    }

    #[test]
    fn kernel_shifts_heat_trace_by_its_dimension(spec in with_kernel(), t in 1e-3f64..2.0) {
        let with = spec.heat_trace(t, tol(), true).unwrap();
        let without = spec.heat_trace(t, tol(), false).unwrap();
        prop_assert!((with - without - spec.kernel_dim() as f64).abs() <= 1e-12 * with.max(1.0));
    }

    #[test]
    fn heat_trace_is_additive(a in any_spectrum(), b in any_spectrum(), t in 1e-3f64..1.0) {
        let sum = a.direct_sum(&b);
        let lhs = sum.heat_trace(t, tol(), true).unwrap();
        let rhs = a.heat_trace(t, tol(), true).unwrap() + b.heat_trace(t, tol(), true).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1.0));
    }

    #[test]
    fn log_det_eps_is_monotone_and_additive(a in any_spectrum(), b in finite(), e in 1e-4f64..0.5) {
        let f = |s: &Spectrum, e: f64| log_det_eps(s, e, true).unwrap();
        prop_assert!(f(&a, e) < f(&a, 1.5 * e));
        let sum = a.direct_sum(&b);
        let lhs = f(&sum, e);
        prop_assert!((lhs - f(&a, e) - f(&b, e)).abs() <= 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn log_det_reg_is_additive(a in lattice(), b in finite()) {
        let sum = a.direct_sum(&b);
        let d = |s: &Spectrum| log_det_reg(s, &exact_expansion(s, true).unwrap()).unwrap().value;
        let big = |s: &Spectrum| log_Det_reg(s, &exact_expansion(s, true).unwrap()).unwrap().value;
        prop_assert!((d(&sum) - d(&a) - d(&b)).abs() <= 1e-8);
        prop_assert!((big(&sum) - big(&a) - big(&b)).abs() <= 1e-8);
    }

    #[test]
    fn zeta_scales_as_power(spec in any_spectrum(), a in 0.2f64..5.0, s in 0.6f64..2.5) {
        let scaled = spec.scaled(a).unwrap();
        let z = |sp: &Spectrum, s: f64| zeta_value(sp, &exact_expansion(sp, true).unwrap(), s).unwrap().value;
        let lhs = z(&scaled, s);
        let rhs = a.powf(-s) * z(&spec, s);
        prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1.0));
        let big = |sp: &Spectrum| {
            let e = exact_expansion(sp, true).unwrap();
            (log_Det_reg(sp, &e).unwrap().value, e.b0_primed())
        };
        let (d0, b0) = big(&spec);
        let (d1, _) = big(&scaled);
        prop_assert!((d1 - d0 - a.ln() * b0).abs() <= 1e-8);
    }

    #[test]
    fn zeta_at_zero_is_b0_primed(spec in with_kernel()) {
        let e = exact_expansion(&spec, true).unwrap();
        let z = zeta_value(&spec, &e, 0.0).unwrap().value;
        let modes = spec.heat_trace(1e9, tol(), false).unwrap();
        prop_assert_eq!(z, e.b0_primed());
        prop_assert!(modes.abs() < 1e-300);
        prop_assert_eq!(e.b0_primed(), spec.finite_dimension().unwrap() as f64);
        prop_assert_eq!(e.b0(), e.b0_primed() + spec.kernel_dim() as f64);
    }

    #[test]
    fn mellin_matches_dirichlet(spec in any_spectrum(), s in 1.0f64..3.0) {
        let e = exact_expansion(&spec, true).unwrap();
        let mellin = zeta_value(&spec, &e, s).unwrap();
        let direct = dirichlet_series(&spec, s).unwrap();
        prop_assert!((mellin.value - direct).abs() <= 1e-9 * direct.abs().max(1.0));
    }

    #[test]
    fn bridge_holds(spec in any_spectrum()) {
        let e = exact_expansion(&spec, true).unwrap();
        let r = verify_bridge(&spec, &e).unwrap();
        prop_assert!(r.budget <= 1e-6);
        prop_assert!(r.discrepancy <= 2.0 * r.budget, "{:?}", r);
    }

    #[test]
    fn loop_orbit_shape_trace_vanishes(spec in orbit(), e in 1e-3f64..10.0) {
        prop_assert!(trace_shape_eps(&spec, e).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn orbit_weyl_density(spec in orbit()) {
        let primed = orbit_spectrum(&spec, true).unwrap();
        let e = exact_expansion(&primed, true).unwrap();
        let expected = spec.dim_g() as f64 / (2.0 * std::f64::consts::PI.sqrt());
        prop_assert!((e.coeff(-1) - expected).abs() <= 1e-12 * expected);
    }
}
