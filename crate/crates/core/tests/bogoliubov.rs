use bose_cert::bogoliubov::*;
use bose_cert::fourier::RadialTransform;
use bose_cert::localization::*;
use bose_cert::potential::RadialPotential;
use bose_cert::scattering::solve_scattering;
use proptest::prelude::*;
use std::f64::consts::PI;

fn setup(k: f64, rho_a3: f64, s: f64) -> LocalizedPotentials {
    let pot = RadialPotential::square_well(2.0, 1.0).unwrap();
    let sol = solve_scattering(&pot, 2.0, 1e-10).unwrap();
    let chi = build_bump(DEFAULT_STEEPNESS).unwrap();
    let rho = rho_a3 / sol.a.powi(3);
    let p = GeometryParams { rho_mu: rho, k, l_over_ell: 4.0, s, b: 0.1, xi: 3.0, delta: 0.0, epsilon: 0.0 };
    let geom = BoxGeometry::new(&p, sol.a, 1.0).unwrap();
    build_localized_potentials(&geom, &pot, &sol, &chi).unwrap()
}

#[test]
fn g_hat_energy_matches_g_omega() {
    for (v0, r) in [(2.0, 1.0), (0.5, 1.5), (40.0, 0.5)] {
        let pot = RadialPotential::square_well(v0, r).unwrap();
        let sol = solve_scattering(&pot, 2.0 * r, 1e-10).unwrap();
        let id = g_omega_identity(&sol, 1e-6).unwrap();
        assert!(id.relative_residual <= 1e-6, "v0={v0}: {id:?}");
    }
}

#[test]
fn vanishing_interaction_gives_zero() {
    let t = RadialTransform::new(|_| 0.0, 1.0, &[], 64.0, 0);
    let table = SymbolTable::from_transform(&t, 20.0, 0.02, 0.0, 0);
    let b = bogoliubov_integral(&QuadraticSymbol::new(&table, 5.0).unwrap()).unwrap();
    assert_eq!((b.integral, b.i, b.ii, b.bound), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn bogoliubov_terms_are_consistent() {
    let lp = setup(10.0, 1e-6, 0.02);
    let table = SymbolTable::adaptive_for_box(&lp, 0.02, 4.0, 1e-8, 0).unwrap();
    let gw = lp.sol.integral_g_omega().unwrap();
    let t = lp.support() / lp.ell();
    let cw = lp.w1_constant();
    for n in [1.0, 2.0, 4.0] {
        let b = bogoliubov_integral(&QuadraticSymbol::new(&table, n).unwrap()).unwrap();
        assert!(b.pointwise_ok && b.symbol_ok, "{b:?}");
        assert!(b.bound >= b.i + b.ii - b.remainder_bound - b.tail_bound);
        // g ≤ W₁ ≤ (1 + C(R/ℓ)²)g brackets the Coulomb energy of W₁ against ∫gω
        let coulomb = -b.i * 2.0 * lp.ell().powi(3) / (n * (n + 1.0));
        assert!(coulomb >= gw * (1.0 - 1e-8), "{coulomb} < {gw}");
        assert!(coulomb <= gw * (1.0 + cw * t * t).powi(2) * (1.0 + 1e-8));
    }
}

#[test]
fn doubling_p_max_moves_bound_within_tail() {
    let lp = setup(10.0, 1e-6, 0.02);
    let coarse = SymbolTable::for_box(&lp, 0.02, 128.0, 0);
    let fine = SymbolTable::for_box(&lp, 0.02, 256.0, 0);
    let a = bogoliubov_integral(&QuadraticSymbol::new(&coarse, 3.0).unwrap()).unwrap();
    let b = bogoliubov_integral(&QuadraticSymbol::new(&fine, 3.0).unwrap()).unwrap();
    assert!((a.bound - b.bound).abs() <= a.tail_bound, "{} {} {}", a.bound, b.bound, a.tail_bound);
}

#[test]
fn a0_literal_cases() {
    let lp = setup(10.0, 1e-6, 0.02);
    let g = lp.geom;
    let ints = LocalIntegrals { w1: 8.0 * PI * g.ell.powi(3) * g.a, w2: g.ell.powi(3) * (8.0 * PI * g.a + 1.7) };
    let l3 = g.ell.powi(3);
    let zero = compute_a0(0.0, 3.0, &g, &ints).unwrap();
    assert!((zero + 0.25 * (g.rho_mu + 1.0 / l3).powi(2) * ints.w1).abs() <= 1e-15 * zero.abs());
    let one = compute_a0(1.0, 3.0, &g, &ints).unwrap();
    assert!((one + (g.rho_mu / l3 + 0.25 * g.rho_mu * g.rho_mu) * ints.w1).abs() <= 1e-15 * one.abs());
    assert!(compute_a0(4.0, 3.0, &g, &ints).is_err());
}

#[test]
fn a0_at_integer_filling_matches_expansion() {
    let lp = setup(10.0, 1e-6, 0.02);
    let mut g = lp.geom;
    let n = 7.0;
    g.rho_mu = n / g.ell.powi(3);
    let (a, big_g, l3) = (g.a, 1.7, g.ell.powi(3));
    let ints = LocalIntegrals { w1: 8.0 * PI * l3 * a, w2: l3 * (8.0 * PI * a + big_g) };
    let hand = n * (n - 1.0) * (8.0 * PI * a + big_g) / (2.0 * l3) - 8.0 * PI * a * n * n / l3 - 2.0 * PI * a / l3;
    let a0 = compute_a0(n, n, &g, &ints).unwrap();
    assert!((a0 - hand).abs() <= 1e-12 * hand.abs(), "{a0} vs {hand}");
}

#[test]
fn e_main_vertex() {
    let (a, rho, ell): (f64, f64, f64) = (0.3, 2e-3, 17.0);
    let n0 = rho * ell.powi(3);
    let v = e_main(a, rho, ell, n0);
    let expect = -4.0 * PI * a * rho * rho * ell.powi(3);
    assert!((v - expect).abs() <= 1e-12 * expect.abs());
    for d in [1e-3, 0.5, 3.0] {
        assert!(e_main(a, rho, ell, n0 + d) > v && e_main(a, rho, ell, n0 - d) > v);
    }
}

#[test]
fn c0_stable_under_refinement() {
    let lp = setup(10.0, 1e-6, 0.01);
    let c = |refine| box_lower_bound(&BoxContext::new(&lp, 0.1, 0.01, BoundConstants::default(), refine).unwrap()).unwrap();
    let (a, b) = (c(0), c(1));
    assert!(a.c0 > 0.0 && (a.c0 - b.c0).abs() <= 0.05 * a.c0, "{} {}", a.c0, b.c0);
    assert!(a.min_total <= a.leading);
    let row = &a.rows[1];
    assert!((row.e_main + row.e_error - row.total).abs() <= 1e-12 * row.total.abs());
}

#[test]
fn full_groups_nonnegative_when_dilute() {
    let lp = setup(10.0, 1e-14, 0.02);
    let ctx = BoxContext::new(&lp, 0.1, 0.02, BoundConstants::default(), 0).unwrap();
    let bb = box_lower_bound(&ctx).unwrap();
    assert!(bb.full_groups_nonnegative, "{:?}", bb.notes);
    assert!(bb.rows.iter().all(|r| r.e_gap_coeff >= 0.0));
}

#[test]
fn small_b_does_not_dominate() {
    let lp = setup(10.0, 1e-6, 0.02);
    let r = BoxContext::new(&lp, 1e-4, 0.02, BoundConstants::default(), 0).and_then(|c| box_lower_bound(&c));
    assert!(matches!(r, Err(bose_cert::Error::GapNotDominating(_))), "{r:?}");
}

#[test]
fn lhy_values() {
    assert!((lhy_constant() - 4.814418).abs() <= 1e-6);
    let p = lhy_energy(1e-4, 1.0).unwrap();
    assert!((p.correction / p.leading - 4.814418e-2).abs() <= 1e-8);
    assert!((p.leading - 4.0 * PI * 1e-4).abs() < 1e-18);
    let tiny = lhy_energy(1e-16, 1.0).unwrap();
    assert!((tiny.e_per_particle / tiny.leading - 1.0).abs() < 1e-6);
    assert!(matches!(lhy_energy(2.0, 1.0), Err(bose_cert::Error::DilutenessViolation(_))));
}

fn depletion(ex: f64, lb_shift: f64, big_l: f64) -> DepletionInputs {
    let (rho, a) = (1e-3, 0.5);
    DepletionInputs {
        energy_excess_per_particle: ex,
        lower_bound_per_particle: 4.0 * PI * a * rho - lb_shift,
        big_l,
        n: rho * big_l.powi(3),
        rho,
        a,
        epsilon: 0.0,
    }
}

#[test]
fn depletion_examples() {
    assert_eq!(depletion_bound(&depletion(0.0, 0.0, 30.0)).unwrap().fraction_bound, 0.0);
    let a = depletion_bound(&depletion(1e-6, 2e-6, 30.0)).unwrap();
    let b = depletion_bound(&depletion(1e-6, 2e-6, 60.0)).unwrap();
    assert!((b.fraction_bound / a.fraction_bound - 4.0).abs() < 1e-12);
    let (rho, aa) = (1e-3, 0.5);
    let x: f64 = rho * aa * aa * aa;
    assert!((a.fraction_bound - a.constant * rho * aa * 900.0 * x.sqrt()).abs() <= 1e-12 * a.fraction_bound);
    assert!(matches!(depletion_bound(&depletion(0.0, -1.0, 30.0)), Err(bose_cert::Error::InconsistentInputs(_))));
}

#[test]
fn condensation_flag() {
    let (rho, a) = (1e-3, 0.5);
    let x: f64 = rho * a * a * a;
    let big_l = (rho * a).powf(-0.5) * x.powf(-0.2);
    let mut inp = depletion(0.0, 0.0, big_l);
    inp.n = rho * big_l.powi(3);
    let d = depletion_bound(&inp).unwrap();
    assert!((d.delta - 0.2).abs() < 1e-12 && d.complete_condensation);
    let big_l = (rho * a).powf(-0.5) * x.powf(-0.3);
    let mut inp = depletion(0.0, 0.0, big_l);
    inp.n = rho * big_l.powi(3);
    assert!(!depletion_bound(&inp).unwrap().complete_condensation);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn partition_respects_bounds(m in 0u64..5000, xi in 3.0f64..6.0, fill in 1.0f64..40.0) {
        let p = partition_particles(m, xi, fill).unwrap();
        prop_assert_eq!(p.sizes.iter().sum::<u64>(), m);
        let (lo, hi) = (xi * fill, (xi + 1.0) * fill);
        if let Some((last, rest)) = p.sizes.split_last() {
            prop_assert!(rest.iter().all(|s| *s as f64 >= lo && *s as f64 <= hi));
            prop_assert!(*last as f64 <= hi);
            prop_assert_eq!(p.last_below_minimum, (*last as f64) < lo);
        }
        prop_assert_eq!(p, partition_particles(m, xi, fill).unwrap());
    }
}

#[test]
fn partition_examples() {
    assert_eq!(partition_particles(10, 3.0, 1.0).unwrap().sizes, vec![4, 3, 3]);
    assert!(partition_particles(0, 3.0, 1.0).unwrap().sizes.is_empty());
    let p = partition_particles(2, 3.0, 1.0).unwrap();
    assert_eq!((p.sizes, p.last_below_minimum), (vec![2], true));
    assert!(partition_particles(5, 2.0, 1.0).is_err());
}
