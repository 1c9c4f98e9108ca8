use bose_cert::fock::*;
use bose_cert::localization::*;
use bose_cert::par;
use bose_cert::potential::RadialPotential;
use bose_cert::scattering::solve_scattering;
use nalgebra::DMatrix;
use std::f64::consts::PI;

fn well() -> RadialPotential {
    RadialPotential::square_well(2.0, 1.0).unwrap()
}

fn hamiltonian(big_l: f64, n: usize, coupling: f64) -> MomentumHamiltonian {
    let modes = ModeSet::new(big_l, DEFAULT_CUTOFF).unwrap();
    let fs = FourierSamples::from_potential(&well().with_coupling(coupling), big_l, 4 * DEFAULT_CUTOFF).unwrap();
    build_hamiltonian_momentum(&modes, &fs, n, [0; 3], DEFAULT_MAX_DIM).unwrap()
}

#[test]
fn basis_counts_and_order() {
    let modes = ModeSet::new(10.0, DEFAULT_CUTOFF).unwrap();
    assert_eq!(modes.len(), 33);
    assert_eq!(modes.modes[0], [0, 0, 0]);
    for n in 1..=3 {
        let b = OccupationBasis::full(33, n, 100_000).unwrap();
        assert_eq!(b.dim() as u64, binomial(32 + n as u64, n as u64));
        assert!((1..b.dim()).all(|i| b.state(i - 1) < b.state(i)));
        assert!((0..b.dim()).all(|i| b.index_of(b.state(i)) == Some(i)));
    }
    let total: usize = momentum_sectors(&modes, 3, 100_000).unwrap().iter().map(|s| s.1).sum();
    assert_eq!(total, 6545);
    assert!(matches!(OccupationBasis::full(33, 6, 1000), Err(bose_cert::Error::DimensionOverflow { .. })));
}

#[test]
fn free_bosons_condense_exactly() {
    for n in [2, 3, 4] {
        let gs = hamiltonian(10.0, n, 0.0).ground_state(&LanczosOptions::default()).unwrap();
        assert_eq!(gs.e0, 0.0);
        assert_eq!(gs.nplus, 0.0);
        assert_eq!(gs.n0, n as f64);
    }
}

#[test]
fn single_particle_spectrum_is_k_squared() {
    let big_l = 7.0;
    let modes = ModeSet::new(big_l, DEFAULT_CUTOFF).unwrap();
    let fs = FourierSamples::from_potential(&well(), big_l, 16).unwrap();
    let mut got: Vec<f64> = momentum_sectors(&modes, 1, 1000)
        .unwrap()
        .iter()
        .map(|(p, _)| build_hamiltonian_momentum(&modes, &fs, 1, *p, 1000).unwrap().op.get(0, 0))
        .collect();
    let mut want: Vec<f64> = (0..modes.len()).map(|i| modes.k2(i)).collect();
    got.sort_by(f64::total_cmp);
    want.sort_by(f64::total_cmp);
    assert_eq!(got, want);
}

#[test]
fn hamiltonian_is_symmetric() {
    for n in [2, 3] {
        let h = hamiltonian(8.0, n, 1.0);
        assert!(h.op.max_asymmetry() <= 1e-12 * h.op.max_abs(), "{}", h.op.max_asymmetry());
    }
}

#[test]
fn lanczos_matches_dense() {
    for (n, l) in [(2, 8.0), (3, 8.0), (3, 12.0)] {
        let h = hamiltonian(l, n, 1.0);
        assert!(h.basis.dim() <= 2000);
        let gs = h.ground_state(&LanczosOptions::default()).unwrap();
        let dense = gs.solver.dense_e0.unwrap();
        assert!((gs.e0 - dense).abs() <= 1e-10, "N={n}: {} vs {dense}", gs.e0);
        assert!(gs.count_residual <= 1e-10);
    }
}

#[test]
fn two_bosons_follow_perturbation_theory() {
    let big_l = 10.0;
    let l3: f64 = big_l * big_l * big_l;
    let c = 1e-3;
    let modes = ModeSet::new(big_l, DEFAULT_CUTOFF).unwrap();
    let fs = FourierSamples::from_potential(&well().with_coupling(c), big_l, 16).unwrap();
    let h = build_hamiltonian_momentum(&modes, &fs, 2, [0; 3], 1000).unwrap();
    let e0 = h.ground_state(&LanczosOptions::default()).unwrap().e0;
    // independent closed form of v̂ for the square well
    let v0 = 2.0 * c;
    let vhat = |q: f64| if q == 0.0 { 4.0 * PI * v0 / 3.0 } else { 4.0 * PI * v0 * (q.sin() - q * q.cos()) / q.powi(3) };
    let e1 = vhat(0.0) / l3;
    let pairs: Vec<f64> = (1..modes.len()).map(|i| modes.k2(i)).collect();
    let e2: f64 = -pairs.iter().map(|k2| vhat(k2.sqrt()).powi(2) / (2.0 * k2 * l3 * l3)).sum::<f64>();
    // majorant of the third-order term: couplings are O(v̂/L³), denominators ≥ 2k²_min
    let kmin2 = pairs.iter().copied().fold(f64::INFINITY, f64::min);
    let third = 4.0 * e2.abs() * (vhat(0.0) / l3) * (pairs.len() as f64) / (2.0 * kmin2);
    assert!((e0 - e1 - e2).abs() <= third, "{e0} vs {} (third {third:e})", e1 + e2);
    assert!((e0 - e1).abs() > (e0 - e1 - e2).abs());
}

#[test]
fn projector_counts() {
    let h = hamiltonian(10.0, 3, 1.0);
    let pr = build_projectors(&h.basis);
    assert_eq!(&pr.p * &pr.p, pr.p);
    assert_eq!(&pr.q * &pr.q, pr.q);
    assert!((0..h.basis.dim()).all(|i| pr.n0[i] + pr.nplus[i] == 3.0));
    let mut rng = 0x9e37u64;
    let x: Vec<f64> = (0..h.basis.dim())
        .map(|_| {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    let (n0, np) = pr.expectations(&x);
    assert!((n0 + np - 3.0).abs() <= 1e-12);
    let mut e = vec![0.0; h.basis.dim()];
    e[h.basis.index_of(&[0, 0, 0]).unwrap()] = 1.0;
    assert_eq!(pr.expectations(&e), (3.0, 0.0));
    let one = h.basis.index_of(&[0, 1, 2]).unwrap_or_else(|| h.basis.index_of(&[0, 1, 6]).unwrap());
    let mut e = vec![0.0; h.basis.dim()];
    e[one] = 1.0;
    assert_eq!(pr.expectations(&e).1, 2.0);
}

#[test]
fn eigenvector_dump_round_trips() {
    let h = hamiltonian(10.0, 2, 1.0);
    let gs = h.ground_state(&LanczosOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gs.bin");
    write_eigenvector(&path, &gs.solver.vector).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize, gs.dim);
    assert_eq!(bytes.len(), 8 + 8 * gs.dim);
    assert_eq!(read_eigenvector(&path).unwrap(), gs.solver.vector);
}

#[test]
fn thread_count_does_not_change_energy() {
    let h = hamiltonian(10.0, 3, 1.0);
    let o = LanczosOptions::default();
    let a = par::with_threads(1, || h.ground_state(&o).unwrap());
    let b = par::with_threads(3, || h.ground_state(&o).unwrap());
    assert!((a.e0 - b.e0).abs() <= 1e-12 && (a.nplus - b.nplus).abs() <= 1e-12);
}

#[test]
fn depletion_falls_with_coupling() {
    let sweep = DepletionSweep {
        big_l: 10.0,
        n: 3,
        cutoff: DEFAULT_CUTOFF,
        couplings: vec![0.0, 0.25, 0.5, 1.0],
        max_dim: DEFAULT_MAX_DIM,
        lanczos: LanczosOptions::default(),
    };
    let st = depletion_study(&well(), &sweep).unwrap();
    assert!(st.depletion_monotone && st.energy_monotone, "{:?}", st.rows);
    assert_eq!(st.rows[0].nplus_frac, 0.0);
    assert!(st.rows.iter().all(|r| r.count_residual <= 1e-10));
    for r in &st.rows[1..] {
        assert!(r.bound_value >= r.nplus_frac * (1.0 - 1e-12));
        assert!((0.5..=1.5).contains(&r.energy_ratio), "{}", r.energy_ratio);
    }
}

fn small_box(ell: f64, rho: f64) -> LocalizedPotentials {
    let pot = well();
    let sol = solve_scattering(&pot, 2.0, 1e-10).unwrap();
    let chi = build_bump(DEFAULT_STEEPNESS).unwrap();
    let p = GeometryParams { rho_mu: 1e-6, k: 10.0, l_over_ell: 4.0, s: 0.02, b: 0.1, xi: 3.0, delta: 0.0, epsilon: 0.0 };
    let mut geom = BoxGeometry::new(&p, sol.a, 1.0).unwrap().with_ell(ell);
    geom.rho_mu = rho;
    build_localized_potentials(&geom, &pot, &sol, &chi).unwrap()
}

#[test]
fn potential_decomposition_is_exact() {
    let lp = small_box(2.2, 0.05);
    for (n, m) in [(2, 2), (2, 3), (3, 2)] {
        let lat = LatticeBox::new(2.2, m, Boundary::Box).unwrap();
        let k = PairKernels::sample(&lat, &lp).unwrap();
        if m == 3 {
            assert!(k.w.iter().filter(|v| **v != 0.0).count() > lat.n_sites());
        }
        let t = build_potsplit_terms(&k, n, 10_000).unwrap();
        assert!(t.max_residual <= 1e-12, "N={n} M={m}: {:e}", t.max_residual);
        assert!(t.q.iter().all(|q| (q - q.transpose()).amax() <= 1e-12));
    }
}

#[test]
fn lhs_matches_direct_assembly() {
    let lp = small_box(2.2, 0.05);
    let lat = LatticeBox::new(2.2, 2, Boundary::Box).unwrap();
    let k = PairKernels::sample(&lat, &lp).unwrap();
    let t = build_potsplit_terms(&k, 3, 10_000).unwrap();
    let s = lat.n_sites();
    let sites: Vec<Vec3> = (0..s).map(|i| lat.site(i)).collect();
    let h3 = lat.weight();
    let int_w1 = |x: &Vec3| h3 * sites.iter().map(|y| lp.w1(x, y)).sum::<f64>();
    let mut worst: f64 = 0.0;
    for a in 0..s {
        for b in 0..s {
            for c in 0..s {
                let idx = (a * s + b) * s + c;
                let xs = [sites[a], sites[b], sites[c]];
                let mut e = -0.05 * xs.iter().map(int_w1).sum::<f64>();
                for i in 0..3 {
                    for j in 0..3 {
                        if i != j {
                            e += 0.5 * lp.w(&xs[i], &xs[j]);
                        }
                    }
                }
                worst = worst.max((t.lhs[(idx, idx)] - e).abs());
            }
        }
    }
    assert!(worst <= 1e-12, "{worst:e}");
    let off = t.lhs.clone() - DMatrix::from_diagonal(&t.lhs.diagonal());
    assert_eq!(off.amax(), 0.0);
}

#[test]
fn vanishing_omega_collapses_q4() {
    let lp = small_box(2.2, 0.05);
    let lat = LatticeBox::new(2.2, 2, Boundary::Box).unwrap();
    let k = PairKernels::sample(&lat, &lp).unwrap().with_zero_omega();
    let s = lat.n_sites();
    assert!((0..s).all(|i| (0..s).all(|j| k.w1(i, j) == k.w[(i, j)] && k.w2(i, j) == k.w[(i, j)])));
    let t = build_potsplit_terms(&k, 2, 10_000).unwrap();
    // ½Σ_{i≠j} Q_iQ_j w Q_jQ_i with both orderings of the pair
    let p = DMatrix::from_element(s, s, 1.0 / s as f64);
    let qq = (DMatrix::identity(s, s) - &p).kronecker(&(DMatrix::identity(s, s) - &p));
    let w = DMatrix::from_fn(s * s, s * s, |x, y| if x == y { k.w[(x / s, x % s)] } else { 0.0 });
    let expect = &qq * &w * &qq;
    assert!((&t.q[4] - expect).amax() <= 1e-12);
    assert!(t.max_residual <= 1e-12);
}

#[test]
fn interaction_estimate_is_stable() {
    let lp = small_box(2.2, 0.05);
    let lat = LatticeBox::new(2.2, 3, Boundary::Box).unwrap();
    let k = PairKernels::sample(&lat, &lp).unwrap();
    let t = build_potsplit_terms(&k, 2, 10_000).unwrap();
    let a = verify_interaction_estimate(&t, &k, 200, 1).unwrap();
    let b = verify_interaction_estimate(&t, &k, 200, 2).unwrap();
    assert_eq!(a.skipped, 1);
    assert!(a.a2_asymmetry <= 1e-12);
    assert!(a.inf_ratio.is_finite() && b.inf_ratio.is_finite());
    assert!(a.envelope_inf.is_finite() && a.envelope_inf == b.envelope_inf);
    assert!(a.envelope_inf - a.envelope_lower <= 1e-3 * a.envelope_inf.abs(), "{a:?}");
    // every sampled state lies on or above the lower boundary
    assert!(a.inf_ratio >= a.envelope_inf - 1e-9 * a.envelope_inf.abs());
    assert!(b.inf_ratio >= b.envelope_inf - 1e-9 * b.envelope_inf.abs());
}

#[test]
fn commutator_bounded_by_particle_number() {
    let lp = small_box(2.2, 0.05);
    let ell = lp.ell();
    let chi = |x: &Vec3| lp.chi.chi(&[x[0] / ell, x[1] / ell, x[2] / ell]);
    let lat = LatticeBox::new(ell, 2, Boundary::Box).unwrap();
    for n in 1..=3 {
        for kx in [0.0, 2.0 * PI / ell] {
            let r = verify_commutator_bound(&lat, &chi, [kx, 0.0, 0.0], n, 10_000).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }
    let lat3 = LatticeBox::new(ell, 3, Boundary::Box).unwrap();
    assert!(verify_commutator_bound(&lat3, &chi, [0.0, 2.0 * PI / ell, 2.0 * PI / ell], 2, 10_000).unwrap().pass);
    let flat = verify_commutator_bound(&lat, &|_: &Vec3| 1.0, [0.0; 3], 2, 10_000).unwrap();
    assert!((flat.lambda_min - 2.0).abs() < 1e-12 && flat.commutator_norm < 1e-12);
}

#[test]
fn lattice_laplacian_symmetric() {
    for b in [Boundary::Periodic, Boundary::Box] {
        let l = LatticeBox::new(3.0, 3, b).unwrap().laplacian();
        assert_eq!((&l - l.transpose()).amax(), 0.0);
    }
    assert!(LatticeBox::new(1.0, 1, Boundary::Box).is_err());
}


