use bose_cert::localization::*;
use bose_cert::potential::RadialPotential;
use bose_cert::scattering::{solve_scattering, ScatteringSolution};
use proptest::prelude::*;

fn setup(k: f64) -> (RadialPotential, ScatteringSolution, BumpProfile, BoxGeometry) {
    setup_at(k, 1e-6)
}

fn setup_at(k: f64, rho_a3: f64) -> (RadialPotential, ScatteringSolution, BumpProfile, BoxGeometry) {
    let pot = RadialPotential::square_well(2.0, 1.0).unwrap();
    let sol = solve_scattering(&pot, 2.0, 1e-10).unwrap();
    let chi = build_bump(DEFAULT_STEEPNESS).unwrap();
    let rho = rho_a3 / sol.a.powi(3);
    let p = GeometryParams { rho_mu: rho, k, l_over_ell: 4.0, s: 0.02, b: 1e-3, xi: 3.0, delta: 0.0, epsilon: 0.0 };
    let geom = BoxGeometry::new(&p, sol.a, 1.0).unwrap();
    (pot, sol, chi, geom)
}

#[test]
fn integral_identities_k10() {
    let (pot, sol, chi, geom) = setup(10.0);
    let lp = build_localized_potentials(&geom, &pot, &sol, &chi).unwrap();
    let rep = check_integral_identities(&lp, 1e-6);
    for r in &rep.records {
        println!("{} {:e} {:?}", r.check_id, r.residual, r.inputs);
    }
    assert!(rep.pass);
}

#[test]
fn w1_integral_scales_with_ell_cubed() {
    let (pot, sol, chi, geom) = setup(10.0);
    let a = build_localized_potentials(&geom, &pot, &sol, &chi).unwrap();
    let b = build_localized_potentials(&geom.with_ell(2.0 * geom.ell), &pot, &sol, &chi).unwrap();
    let ratio = b.double_integral_w1(8, 12) / a.double_integral_w1(8, 12);
    assert!((ratio - 8.0).abs() / 8.0 < 1e-6, "{ratio}");
}

#[test]
fn w1_constant_non_increasing_as_ell_grows() {
    // K = 20, 10, 5 is the order of increasing ell.
    let cs: Vec<f64> = [20.0, 10.0, 5.0]
        .iter()
        .map(|&k| {
            let (pot, sol, chi, geom) = setup_at(k, 1e-8);
            build_localized_potentials(&geom, &pot, &sol, &chi).unwrap().w1_constant()
        })
        .collect();
    assert!(cs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)), "{cs:?}");
    assert!(cs.iter().all(|c| c.is_finite() && *c > 0.0));
}

#[test]
fn sliding_identity_random_pairs() {
    let (pot, sol, chi, geom) = setup(10.0);
    let pairs = sample_pairs(&geom, 20, 11);
    let rep = sliding_identity_check(&geom, &pot, &sol, &chi, &pairs, 1e-5).unwrap();
    let seam = rep.records[0].residual;
    let worst = rep.max_residual("sliding-");
    println!("seam {seam:e} worst {worst:e}");
    assert!(rep.pass);
}

#[test]
fn sliding_outside_range_is_zero() {
    let (pot, sol, chi, geom) = setup(10.0);
    let pairs = vec![([0.0, 0.0, 0.0], [1.5, 0.0, 0.0])];
    let rep = sliding_identity_check(&geom, &pot, &sol, &chi, &pairs, 1e-5).unwrap();
    assert_eq!(rep.records[0].value, 0.0);
    assert_eq!(rep.records[0].reference, Some(0.0));
}

#[test]
fn sliding_rejects_small_torus() {
    let (pot, sol, chi, mut geom) = setup(10.0);
    geom.big_l = 1.5 * geom.ell;
    assert!(matches!(
        sliding_identity_check(&geom, &pot, &sol, &chi, &[], 1e-5),
        Err(bose_cert::Error::GeometryViolation(_))
    ));
}

#[test]
fn support_violation_is_reported() {
    let pot = RadialPotential::square_well(2.0, 1.0).unwrap();
    let sol = solve_scattering(&pot, 2.0, 1e-10).unwrap();
    let p = GeometryParams { rho_mu: 0.5, k: 2.0, l_over_ell: 4.0, s: 0.1, b: 1e-3, xi: 3.0, delta: 0.0, epsilon: 0.0 };
    assert!(matches!(BoxGeometry::new(&p, sol.a, 1.0), Err(bose_cert::Error::SupportViolation(_))));
}

#[test]
fn mismatched_solution_is_rejected() {
    let (pot, sol, chi, geom) = setup(10.0);
    let other = pot.with_coupling(2.0);
    assert!(matches!(
        build_localized_potentials(&geom, &other, &sol, &chi),
        Err(bose_cert::Error::MissingScattering(_))
    ));
    let _ = sol;
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn kernels_symmetric_and_ordered(
        x in prop::array::uniform3(-10.0f64..10.0),
        d in prop::array::uniform3(-0.6f64..0.6),
    ) {
        let (pot, sol, chi, geom) = setup(10.0);
        let lp = build_localized_potentials(&geom, &pot, &sol, &chi).unwrap();
        let y = [x[0] + d[0], x[1] + d[1], x[2] + d[2]];
        prop_assert_eq!(lp.w(&x, &y), lp.w(&y, &x));
        let (w1, w2) = (lp.w1(&x, &y), lp.w2(&x, &y));
        prop_assert!((w1 - lp.w1(&y, &x)).abs() <= 1e-15 * w1.abs());
        if w1 > 0.0 {
            prop_assert!(w1 <= w2 && w2 <= 2.0 * w1);
        }
    }

    #[test]
    fn delta_increasing(k1 in 0.001f64..0.66, k2 in 0.001f64..0.66) {
        prop_assume!(k1 < k2);
        let d1 = gp_scaling_convert(100.0, k1, 1.0, 1.0).unwrap().delta;
        let d2 = gp_scaling_convert(100.0, k2, 1.0, 1.0).unwrap().delta;
        prop_assert!(d1 < d2);
    }

    #[test]
    fn bump_even_any_steepness(s in 0.05f64..20.0, t in -0.6f64..0.6) {
        let phi = bump_1d(s, t);
        prop_assert_eq!(phi, bump_1d(s, -t));
        prop_assert!(phi >= 0.0);
    }
}
