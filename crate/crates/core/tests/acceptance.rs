//! Acceptance run: one line per criterion, nonzero exit if any fails.

use bose_cert::bogoliubov::*;
use bose_cert::fock::*;
use bose_cert::kinetic::{compute_f, search_admissible, CertifyOptions};
use bose_cert::localization::*;
use bose_cert::potential::RadialPotential;
use bose_cert::scattering::{solve_scattering, ScatteringSolution};
use std::f64::consts::PI;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn well(v0: f64) -> RadialPotential {
    RadialPotential::square_well(v0, 1.0).unwrap()
}

fn solution() -> ScatteringSolution {
    solve_scattering(&well(2.0), 2.0, 1e-10).unwrap()
}

fn box_at(k: f64, rho_a3: f64, s: f64) -> LocalizedPotentials {
    let pot = well(2.0);
    let sol = solution();
    let chi = build_bump(DEFAULT_STEEPNESS).unwrap();
    let p = GeometryParams { rho_mu: rho_a3 / sol.a.powi(3), k, l_over_ell: 4.0, s, b: 0.1, xi: 3.0, delta: 0.0, epsilon: 0.0 };
    let geom = BoxGeometry::new(&p, sol.a, 1.0).unwrap();
    build_localized_potentials(&geom, &pot, &sol, &chi).unwrap()
}

fn small_box() -> LocalizedPotentials {
    let lp = box_at(10.0, 1e-6, 0.02);
    let mut geom = lp.geom.with_ell(2.2);
    geom.rho_mu = 0.05;
    build_localized_potentials(&geom, &well(2.0), &lp.sol, &lp.chi).unwrap()
}

fn c1_scattering_length() -> Outcome {
    let sol = solution();
    let exact = 1.0 - 1f64.tanh();
    let r = (sol.a - exact).abs() / exact;
    outcome(r <= 1e-8, format!("a = {:.15}, rel err {r:.2e}", sol.a))
}

fn c2_born_limit() -> Outcome {
    let v0 = 1e-3;
    let a = solve_scattering(&well(v0), 2.0, 1e-10).unwrap().a;
    let r = (a - v0 / 6.0).abs() / a;
    outcome(r <= 1e-2, format!("a = {a:.6e}, rel dev from v0 R^3/6 {r:.2e}"))
}

fn c3_fourier() -> Outcome {
    let sol = solution();
    let g0 = sol.g_hat(0.0).unwrap();
    let worst = [0.5, 1.0, 2.0, 5.0]
        .iter()
        .map(|&k| (2.0 * k * k * sol.omega_hat(k).unwrap() - sol.g_hat(k).unwrap()).abs() / g0)
        .fold(0.0, f64::max);
    outcome(worst <= 1e-6, format!("max residual {worst:.2e}"))
}

fn c4_integrals() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in [5.0, 10.0] {
        let lp = box_at(k, 1e-6, 0.02);
        let (l3, a) = (lp.ell().powi(3), lp.sol.a);
        let gw = lp.sol.integral_g_omega().unwrap();
        let r1 = (lp.double_integral_w1(8, 12) - 8.0 * PI * l3 * a).abs() / (8.0 * PI * l3 * a);
        let ref2 = l3 * (8.0 * PI * a + gw);
        let r2 = (lp.double_integral_w2(8, 12) - ref2).abs() / ref2;
        worst = worst.max(r1).max(r2);
    }
    outcome(worst <= 1e-6, format!("max rel residual {worst:.2e} over K = 5, 10"))
}

fn c5_sliding() -> Outcome {
    let lp = box_at(10.0, 1e-6, 0.02);
    let pairs = sample_pairs(&lp.geom, 20, 20_240_917);
    let rep = sliding_identity_check(&lp.geom, &well(2.0), &lp.sol, &lp.chi, &pairs, 1e-5).unwrap();
    let worst = rep.max_residual("sliding-");
    outcome(rep.records.len() == 40 && worst <= 1e-5, format!("20 pairs, max residual {worst:.2e}"))
}

fn c6_kinetic() -> Outcome {
    let chi = build_bump(DEFAULT_STEEPNESS).unwrap();
    let f0 = compute_f(&[0.0; 3], &chi, 0.02, 0.01, 1.0).unwrap().f;
    let b_grid = [1e-4, 1e-3, 1e-2, 1e-1];
    let s_grid = [0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001];
    match search_admissible(&chi, &b_grid, &s_grid, 4.0, &CertifyOptions::default()) {
        Ok((b, s, cert)) => outcome(
            cert.min_margin > 0.0 && cert.lattice_pass && cert.tail_pass && f0.abs() <= 1e-10,
            format!("(b, s) = ({b}, {s}), min margin {:.4}, tail margin {:.3e}, F(0) = {f0:.1e}", cert.min_margin, cert.tail_margin),
        ),
        Err(e) => outcome(false, format!("{e}; F(0) = {f0:.1e}")),
    }
}

fn c7_potsplit() -> Outcome {
    let lp = small_box();
    let mut worst: f64 = 0.0;
    for (n, m) in [(2, 2), (2, 3), (3, 2)] {
        let lat = LatticeBox::new(2.2, m, Boundary::Box).unwrap();
        let k = PairKernels::sample(&lat, &lp).unwrap();
        worst = worst.max(build_potsplit_terms(&k, n, 10_000).unwrap().max_residual);
    }
    outcome(worst <= 1e-12, format!("max |LHS - sum Q| {worst:.2e}"))
}

fn c8_commutator() -> Outcome {
    let lp = small_box();
    let ell = lp.ell();
    let chi = |x: &Vec3| lp.chi.chi(&[x[0] / ell, x[1] / ell, x[2] / ell]);
    let lat = LatticeBox::new(ell, 2, Boundary::Box).unwrap();
    let mut worst = f64::INFINITY;
    for n in 1..=3 {
        for kx in [0.0, 2.0 * PI / ell] {
            worst = worst.min(verify_commutator_bound(&lat, &chi, [kx, 0.0, 0.0], n, 10_000).unwrap().lambda_min);
        }
    }
    outcome(worst >= -1e-10, format!("min lambda_min {worst:.3e}"))
}

fn c9_bogoliubov() -> Outcome {
    let id = g_omega_identity(&solution(), 1e-6).unwrap();
    let lp = box_at(10.0, 1e-6, 0.01);
    let bb = box_lower_bound(&BoxContext::new(&lp, 0.1, 0.01, BoundConstants::default(), 0).unwrap()).unwrap();
    let pointwise = bb.rows.iter().all(|r| r.bogoliubov.pointwise_ok);
    let nodes: usize = bb.rows.iter().map(|r| r.bogoliubov.nodes).sum();
    outcome(
        id.relative_residual <= 1e-6 && pointwise,
        format!("g-omega rel residual {:.2e}; pointwise bound at {nodes} nodes: {pointwise}", id.relative_residual),
    )
}

fn c10_budget() -> Outcome {
    let lp = box_at(10.0, 1e-6, 0.01);
    let g = lp.geom;
    let n0 = g.rho_mu * g.ell.powi(3);
    let f = |n: f64| e_main(g.a, g.rho_mu, g.ell, n);
    let (em, e0, ep) = (f(0.0), f(n0), f(2.0 * n0));
    let vertex = n0 - n0 * (ep - em) / (2.0 * (ep - 2.0 * e0 + em));
    let lead = -4.0 * PI * g.a * g.rho_mu * g.rho_mu * g.ell.powi(3);
    let (ra, rv) = ((vertex - n0).abs() / n0, (e0 - lead).abs() / lead.abs());
    let c0 = |refine| box_lower_bound(&BoxContext::new(&lp, 0.1, 0.01, BoundConstants::default(), refine).unwrap()).unwrap().c0;
    let (a, b) = (c0(0), c0(1));
    let drift = (a - b).abs() / a.abs();
    outcome(
        ra <= 1e-12 && rv <= 1e-12 && drift <= 0.05,
        format!("argmin err {ra:.1e}, value err {rv:.1e}; C0 = {a:.4e} vs {b:.4e} refined ({drift:.1e})"),
    )
}

fn c11_lhy() -> Outcome {
    let c = lhy_constant();
    let oracle = 128.0 / (15.0 * PI.sqrt());
    outcome((c - 4.814418).abs() <= 1e-6 && (c - oracle).abs() <= 1e-15, format!("{c:.9}"))
}

fn c12_ed() -> Outcome {
    let big_l = 10.0;
    let modes = ModeSet::new(big_l, DEFAULT_CUTOFF).unwrap();
    let opts = LanczosOptions::default();
    let zero = FourierSamples::from_fn(big_l, 16, |_| 0.0);
    let free = build_hamiltonian_momentum(&modes, &zero, 4, [0; 3], DEFAULT_MAX_DIM).unwrap().ground_state(&opts).unwrap();
    let exact = free.e0 == 0.0 && free.nplus == 0.0;

    let fs = FourierSamples::from_potential(&well(2.0), big_l, 16).unwrap();
    let mut worst: f64 = 0.0;
    for n in [2, 3, 4] {
        let gs = build_hamiltonian_momentum(&modes, &fs, n, [0; 3], DEFAULT_MAX_DIM).unwrap().ground_state(&opts).unwrap();
        assert!(gs.dim <= 2000);
        worst = worst.max((gs.e0 - gs.solver.dense_e0.unwrap()).abs());
    }

    // closed-form v̂ of the square well, second order with a third-order majorant
    let v0 = 1e-3;
    let l3 = big_l.powi(3);
    let fs = FourierSamples::from_potential(&well(v0), big_l, 16).unwrap();
    let e = build_hamiltonian_momentum(&modes, &fs, 2, [0; 3], 1000).unwrap().ground_state(&opts).unwrap().e0;
    let vhat = |q: f64| if q == 0.0 { 4.0 * PI * v0 / 3.0 } else { 4.0 * PI * v0 * (q.sin() - q * q.cos()) / q.powi(3) };
    let k2: Vec<f64> = (1..modes.len()).map(|i| modes.k2(i)).collect();
    let e1 = vhat(0.0) / l3;
    let e2 = -k2.iter().map(|k| vhat(k.sqrt()).powi(2) / (2.0 * k * l3 * l3)).sum::<f64>();
    let kmin2 = k2.iter().copied().fold(f64::INFINITY, f64::min);
    let budget = 4.0 * e2.abs() * (vhat(0.0) / l3) * k2.len() as f64 / (2.0 * kmin2);
    let pert = (e - e1 - e2).abs();
    outcome(
        exact && worst <= 1e-10 && pert <= budget,
        format!("v=0 exact: {exact}; max |lanczos - dense| {worst:.1e}; N=2 error {pert:.2e} within {budget:.2e}"),
    )
}

fn c13_depletion() -> Outcome {
    let sweep = DepletionSweep {
        big_l: 10.0,
        n: 6,
        cutoff: DEFAULT_CUTOFF,
        couplings: vec![1.0, 0.5, 0.25],
        max_dim: DEFAULT_MAX_DIM,
        lanczos: LanczosOptions::default(),
    };
    let st = depletion_study(&well(2.0), &sweep).unwrap();
    let counts = st.rows.iter().map(|r| r.count_residual).fold(0.0, f64::max);
    let mut by_c: Vec<(f64, f64)> = st.rows.iter().map(|r| (r.coupling, r.nplus_frac)).collect();
    by_c.sort_by(|a, b| a.0.total_cmp(&b.0));
    let strictly = by_c.windows(2).all(|w| w[0].1 < w[1].1);
    let fr: Vec<String> = by_c.iter().map(|(c, f)| format!("{c}: {f:.3e}")).collect();
    outcome(
        strictly && st.depletion_monotone && counts <= 1e-10,
        format!("N = 6, dim {}; n+/N {}; count residual {counts:.1e}", st.rows[0].dim, fr.join(", ")),
    )
}

fn c14_gp_scaling() -> Outcome {
    let d = gp_scaling_convert(1e6, 0.4, 1.0, 0.5).unwrap().delta;
    outcome(d == 0.25, format!("delta = {d:?}"))
}

fn main() {
    // name, budget, check
    let criteria: [(&str, Option<Duration>, fn() -> Outcome); 14] = [
        ("scattering length, square well", Some(Duration::from_secs(1)), c1_scattering_length),
        ("Born limit", Some(Duration::from_secs(1)), c2_born_limit),
        ("Fourier identity", None, c3_fourier),
        ("w1/w2 integral identities", Some(Duration::from_secs(30)), c4_integrals),
        ("sliding identity", None, c5_sliding),
        ("kinetic certificate", Some(Duration::from_secs(300)), c6_kinetic),
        ("potential decomposition", Some(Duration::from_secs(120)), c7_potsplit),
        ("commutator bound", None, c8_commutator),
        ("Bogoliubov integral consistency", None, c9_bogoliubov),
        ("energy budget", None, c10_budget),
        ("LHY constant", None, c11_lhy),
        ("exact diagonalization", None, c12_ed),
        ("depletion trend", Some(Duration::from_secs(900)), c13_depletion),
        ("scaling conversion", None, c14_gp_scaling),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = check();
        let dt = t.elapsed();
        let in_time = budget.is_none_or(|b| dt < b);
        let pass = out.pass && in_time;
        failed += usize::from(!pass);
        let limit = budget.map(|b| format!(" (limit {} s)", b.as_secs())).unwrap_or_default();
        println!(
            "{} {:>2} {name}: {} [{:.2} s{limit}]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            dt.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
