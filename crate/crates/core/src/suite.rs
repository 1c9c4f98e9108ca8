//! The verification suites behind the command-line tool.

use crate::bogoliubov::{
    box_lower_bound, e_main, g_omega_identity, lhy_constant, BoxContext,
};
use crate::check::CheckRecord;
use crate::config::{Resolved, RunConfig};
use crate::error::{Error, Result};
use crate::fock::{
    build_hamiltonian_momentum, build_potsplit_terms, depletion_study, verify_commutator_bound,
    verify_interaction_estimate, Boundary, DepletionSweep, FourierSamples, LatticeBox, ModeSet, PairKernels,
};
use crate::kinetic::{compute_f, search_admissible, CertifyOptions};
use crate::localization::{
    build_localized_potentials, check_integral_identities, gp_scaling_convert, sample_pairs,
    sliding_identity_check, Vec3,
};
use crate::potential::{PotentialKind, RadialPotential};
use crate::report::{SuiteReport, Table};
use crate::scattering::{check_scattering_identities, solve_scattering};
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub const LHY_REFERENCE: f64 = 4.814418;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Scatter,
    Localize,
    KineticCert,
    Bogoliubov,
    PotsplitCheck,
    Ed,
    All,
}

impl Suite {
    pub const SINGLE: [Suite; 6] =
        [Suite::Scatter, Suite::Localize, Suite::KineticCert, Suite::Bogoliubov, Suite::PotsplitCheck, Suite::Ed];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Scatter => "scatter",
            Self::Localize => "localize",
            Self::KineticCert => "kinetic-cert",
            Self::Bogoliubov => "bogoliubov",
            Self::PotsplitCheck => "potsplit-check",
            Self::Ed => "ed",
            Self::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::SINGLE
            .into_iter()
            .chain([Self::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite `{s}`")))
    }
}

/// Runs one suite, or every suite for [`Suite::All`]. Only configuration
/// problems are returned as errors; a check that cannot run is recorded as
/// a failure and the rest still run.
pub fn run_suite(suite: Suite, cfg: &RunConfig, parallel: bool) -> Result<SuiteReport> {
    if suite == Suite::All {
        let parts = run_all(cfg, parallel)?;
        return Ok(SuiteReport::combine("all", cfg.seed, &parts));
    }
    Ok(run_all_of(&[suite], cfg, parallel)?.remove(0))
}

/// Every single suite, each with its own report.
pub fn run_all(cfg: &RunConfig, parallel: bool) -> Result<Vec<SuiteReport>> {
    run_all_of(&Suite::SINGLE, cfg, parallel)
}

fn run_all_of(suites: &[Suite], cfg: &RunConfig, parallel: bool) -> Result<Vec<SuiteReport>> {
    cfg.validate()?;
    for s in suites {
        cfg.validate_for(s.name())?;
    }
    let ctx = cfg.resolve()?;
    if parallel && suites.len() > 1 {
        Ok(std::thread::scope(|sc| {
            let handles: Vec<_> = suites.iter().map(|s| sc.spawn(|| run_one(*s, cfg, &ctx))).collect();
            handles.into_iter().map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p))).collect()
        }))
    } else {
        Ok(suites.iter().map(|s| run_one(*s, cfg, &ctx)).collect())
    }
}

fn run_one(suite: Suite, cfg: &RunConfig, ctx: &Resolved) -> SuiteReport {
    let t = Instant::now();
    let mut rep = SuiteReport::new(suite.name(), cfg.seed);
    rep.note(format!("potential {}; a = {:.15e}", ctx.pot.describe(), ctx.sol.a));
    match suite {
        Suite::Scatter => scatter(cfg, ctx, &mut rep),
        Suite::Localize => localize(cfg, ctx, &mut rep),
        Suite::KineticCert => kinetic(cfg, ctx, &mut rep),
        Suite::Bogoliubov => bogoliubov(cfg, ctx, &mut rep),
        Suite::PotsplitCheck => potsplit(cfg, ctx, &mut rep),
        Suite::Ed => ed(cfg, ctx, &mut rep),
        Suite::All => unreachable!("expanded by run_suite"),
    }
    rep.finish(t.elapsed().as_secs_f64());
    rep
}

fn num(x: f64) -> Value {
    json!(x)
}

fn rel(x: f64, reference: f64) -> f64 {
    (x - reference).abs() / reference.abs()
}

/// a = R − tanh(κR)/κ with κ = (v₀/2)^{1/2}.
pub fn square_well_length(v0: f64, r: f64) -> f64 {
    let kappa = (0.5 * v0).sqrt();
    r - (kappa * r).tanh() / kappa
}

fn scatter(cfg: &RunConfig, ctx: &Resolved, rep: &mut SuiteReport) {
    let tol = &cfg.tolerances;
    let sol = &ctx.sol;
    rep.extend(check_scattering_identities(sol, &cfg.scatter.k_grid, tol.fourier));
    let r = ctx.pot.support_radius();
    if let PotentialKind::SquareWell { v0 } = ctx.pot.kind() {
        let exact = square_well_length(*v0, r);
        rep.push(
            CheckRecord::new("scatter-length-tanh", "square-well-closed-form")
                .input("v0", *v0)
                .input("R", r)
                .value(sol.a)
                .reference(exact)
                .within(rel(sol.a, exact), tol.scattering_length),
        );
    }
    let v0 = cfg.scatter.born_v0;
    let born = RadialPotential::square_well(v0, r)
        .and_then(|p| solve_scattering(&p, 2.0 * r, tol.ode))
        .map(|s| s.a);
    match born {
        Ok(a) => {
            let lead = v0 * r.powi(3) / 6.0;
            rep.push(
                CheckRecord::new("scatter-born-limit", "weak-coupling-scattering-length")
                    .input("v0", v0)
                    .input("R", r)
                    .value(a)
                    .reference(lead)
                    .within(rel(a, lead), tol.born),
            );
        }
        Err(e) => rep.failed("scatter-born-limit", "weak-coupling-scattering-length", &e),
    }
    let mut t = Table::new("fourier", &["k", "g_hat", "omega_hat", "residual"]);
    for &k in &cfg.scatter.k_grid {
        let (g, w) = (sol.g_hat(k), sol.omega_hat(k));
        if let (Ok(g), Ok(w)) = (g, w) {
            let g0 = sol.g_hat(0.0).unwrap_or(f64::NAN);
            t.push(vec![num(k), num(g), num(w), num((2.0 * k * k * w - g).abs() / g0)]);
        }
    }
    rep.tables.push(t);
}

fn localize(cfg: &RunConfig, ctx: &Resolved, rep: &mut SuiteReport) {
    let tol = &cfg.tolerances;
    let r = ctx.pot.support_radius();
    let rho = ctx.geom.rho_mu;
    for &k in &cfg.localize.k_values {
        let res = cfg
            .geometry_for(&ctx.sol, r, k, rho)
            .and_then(|g| build_localized_potentials(&g, &ctx.pot, &ctx.sol, &ctx.chi));
        match res {
            Ok(lp) => {
                let ids = check_integral_identities(&lp, tol.integrals);
                for mut rec in ids.records {
                    rec.check_id = format!("{}-K{k}", rec.check_id);
                    rep.push(rec.input("K", k));
                }
                rep.notes.extend(ids.notes);
            }
            Err(e) => rep.failed(format!("localize-integrals-K{k}"), "localized-kernel-integrals", &e),
        }
    }
    let pairs = sample_pairs(&ctx.geom, cfg.localize.pairs, cfg.seed);
    match sliding_identity_check(&ctx.geom, &ctx.pot, &ctx.sol, &ctx.chi, &pairs, tol.sliding) {
        Ok(ids) => rep.extend(ids),
        Err(e) => rep.failed("sliding", "sliding-localization", &e),
    }
    if let Some(kappa) = cfg.geometry.kappa {
        match gp_scaling_convert(1e6, kappa, 1.0, ctx.sol.a) {
            Ok(gp) => {
                let reference = kappa / (4.0 - 6.0 * kappa);
                rep.push(
                    CheckRecord::new("gp-scaling-delta", "scaling-exponent-conversion")
                        .input("kappa", kappa)
                        .value(gp.delta)
                        .reference(reference)
                        .within((gp.delta - reference).abs(), 4.0 * f64::EPSILON * reference),
                );
            }
            Err(e) => rep.failed("gp-scaling-delta", "scaling-exponent-conversion", &e),
        }
    }
}

fn kinetic(cfg: &RunConfig, ctx: &Resolved, rep: &mut SuiteReport) {
    let kc = &cfg.kinetic;
    let s0 = kc.s_grid[0];
    match compute_f(&[0.0; 3], &ctx.chi, s0, kc.b_grid[0], 1.0) {
        Ok(f) => rep.push(
            CheckRecord::new("kinetic-f-zero", "kinetic-localization-at-zero")
                .input("s", s0)
                .value(f.f)
                .reference(0.0)
                .within(f.f.abs(), cfg.tolerances.f_zero),
        ),
        Err(e) => rep.failed("kinetic-f-zero", "kinetic-localization-at-zero", &e),
    }
    let opts = CertifyOptions { b_cap: kc.b_cap, c23_samples: kc.c23_samples };
    match search_admissible(&ctx.chi, &kc.b_grid, &kc.s_grid, cfg.geometry.l_over_ell, &opts) {
        Ok((b, s, cert)) => {
            let base = |id: &str| CheckRecord::new(id, "kinetic-localization-gap").input("b", b).input("s", s);
            rep.push(
                base("kinetic-lattice-margin")
                    .input("orbits", cert.rows.len() as u64)
                    .input("bounded_orbits", cert.bounded_orbits as u64)
                    .value(cert.min_margin)
                    .holds(cert.lattice_pass && cert.min_margin > 0.0, cert.min_margin),
            );
            rep.push(
                base("kinetic-tail-closed")
                    .input("c_tail", cert.c_tail)
                    .value(cert.tail_margin)
                    .holds(cert.tail_pass, cert.tail_margin),
            );
            rep.notes.extend(cert.notes.iter().cloned());
            rep.note(format!("admissible (b, s) = ({b}, {s}); momenta in units of 1/ell"));
            let mut t = Table::new("margins", &["kx", "ky", "kz", "F", "margin"]);
            for row in &cert.rows {
                t.push(vec![num(row.k[0]), num(row.k[1]), num(row.k[2]), num(row.f), num(row.margin)]);
            }
            rep.tables.push(t);
        }
        Err(e) => rep.failed("kinetic-lattice-margin", "kinetic-localization-gap", &e),
    }
}

fn bogoliubov(cfg: &RunConfig, ctx: &Resolved, rep: &mut SuiteReport) {
    let tol = &cfg.tolerances;
    let bc = &cfg.bogoliubov;
    match g_omega_identity(&ctx.sol, tol.g_omega) {
        Ok(id) => rep.push(
            CheckRecord::new("bogoliubov-g-omega", "coulomb-energy-of-g")
                .input("p_max", id.p_max)
                .input("tail_bound", id.tail_bound)
                .value(id.lhs)
                .reference(id.rhs)
                .within(id.relative_residual, tol.g_omega),
        ),
        Err(e) => rep.failed("bogoliubov-g-omega", "coulomb-energy-of-g", &e),
    }

    // E_Main is an exact parabola; its vertex from three samples must land on ρ_μℓ³.
    let g = &ctx.geom;
    let n0 = g.rho_mu * g.ell.powi(3);
    let (em, e0, ep) = (e_main(g.a, g.rho_mu, g.ell, 0.0), e_main(g.a, g.rho_mu, g.ell, n0), e_main(g.a, g.rho_mu, g.ell, 2.0 * n0));
    let vertex = n0 - n0 * (ep - em) / (2.0 * (ep - 2.0 * e0 + em));
    rep.push(
        CheckRecord::new("bogoliubov-e-main-argmin", "main-term-minimizer")
            .value(vertex)
            .reference(n0)
            .within(rel(vertex, n0), tol.e_main),
    );
    let lead = -4.0 * PI * g.a * g.rho_mu * g.rho_mu * g.ell.powi(3);
    rep.push(
        CheckRecord::new("bogoliubov-e-main-value", "main-term-minimizer")
            .value(e0)
            .reference(lead)
            .within(rel(e0, lead), tol.e_main),
    );

    let mut t = Table::new("budget", &["rho_a3", "n", "E_Main", "E_gap_coeff", "E_error", "total", "C0_realized"]);
    let r = ctx.pot.support_radius();
    for &x in &bc.rho_a3 {
        let tag = format!("{x:e}");
        let id = |s: &str| format!("bogoliubov-{s}-rho{tag}");
        let bound = |refine: u32| {
            cfg.geometry_for(&ctx.sol, r, cfg.geometry.k, x / ctx.sol.a.powi(3))
                .and_then(|geom| build_localized_potentials(&geom, &ctx.pot, &ctx.sol, &ctx.chi))
                .and_then(|lp| BoxContext::new(&lp, cfg.geometry.b, cfg.geometry.s, bc.constants, refine))
                .and_then(|c| box_lower_bound(&c))
        };
        let (coarse, fine) = match (bound(bc.refine), bound(bc.refine + 1)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                rep.failed(id("box-bound"), "box-energy-budget", &e);
                continue;
            }
        };
        let worst = coarse.rows.iter().map(|r| r.bogoliubov.max_pointwise_ratio).fold(0.0, f64::max);
        let nodes: usize = coarse.rows.iter().map(|r| r.bogoliubov.nodes).sum();
        rep.push(
            CheckRecord::new(id("pointwise"), "square-root-expansion-bound")
                .input("nodes", nodes as u64)
                .value(worst)
                .holds(coarse.rows.iter().all(|r| r.bogoliubov.pointwise_ok), 1.0 - worst),
        );
        rep.push(
            CheckRecord::new(id("c0-stability"), "box-energy-budget")
                .input("refine", bc.refine)
                .input("c0_refined", fine.c0)
                .value(coarse.c0)
                .reference(fine.c0)
                .within(rel(coarse.c0, fine.c0), tol.c0_stability),
        );
        rep.note(format!(
            "rho_a3 = {tag}: C0 = {:.6e}, argmin n = {}, full groups non-negative: {}, gap dominates: {}",
            coarse.c0, coarse.argmin_n, coarse.full_groups_nonnegative, coarse.gap_dominates
        ));
        rep.notes.extend(coarse.notes.iter().map(|n| format!("rho_a3 = {tag}: {n}")));
        let lead = coarse.leading;
        // ρ_μ²aℓ³(ρ_μa³)^{1/2}
        let scale = lead / (-4.0 * PI) * x.sqrt();
        for row in &coarse.rows {
            t.push(vec![
                num(x),
                num(row.n),
                num(row.e_main),
                num(row.e_gap_coeff),
                num(row.e_error),
                num(row.total),
                num(-(row.total - lead) / scale),
            ]);
        }
    }
    rep.tables.push(t);

    let c = lhy_constant();
    rep.push(
        CheckRecord::new("bogoliubov-lhy-constant", "lee-huang-yang-constant")
            .value(c)
            .reference(LHY_REFERENCE)
            .within((c - LHY_REFERENCE).abs(), tol.lhy),
    );
}

fn potsplit(cfg: &RunConfig, ctx: &Resolved, rep: &mut SuiteReport) {
    let pc = &cfg.potsplit;
    let tol = &cfg.tolerances;
    let mut geom = ctx.geom.with_ell(pc.ell);
    geom.rho_mu = pc.rho_mu;
    let lp = match build_localized_potentials(&geom, &ctx.pot, &ctx.sol, &ctx.chi) {
        Ok(lp) => lp,
        Err(e) => return rep.failed("potsplit-setup", "potential-decomposition", &e),
    };
    for &(n, m) in &pc.cases {
        let id = format!("potsplit-identity-N{n}-M{m}");
        let run = LatticeBox::new(pc.ell, m, Boundary::Box)
            .and_then(|lat| PairKernels::sample(&lat, &lp))
            .and_then(|k| build_potsplit_terms(&k, n, pc.max_dim).map(|t| (k, t)));
        let (k, terms) = match run {
            Ok(v) => v,
            Err(e) => {
                rep.failed(id, "potential-decomposition", &e);
                continue;
            }
        };
        rep.push(
            CheckRecord::new(id, "potential-decomposition")
                .input("N", n as u64)
                .input("M", m as u64)
                .input("dim", terms.dim as u64)
                .value(terms.max_residual)
                .within(terms.max_residual, tol.potsplit),
        );
        let id = format!("potsplit-interaction-N{n}-M{m}");
        match verify_interaction_estimate(&terms, &k, pc.samples, cfg.seed) {
            Ok(est) => {
                let slack = 1e-9 * est.envelope_inf.abs();
                rep.push(
                    CheckRecord::new(id, "interaction-estimate-constant")
                        .input("samples", est.samples as u64)
                        .input("envelope_lower", est.envelope_lower)
                        .input("sampled_inf", est.inf_ratio)
                        .value(est.envelope_inf)
                        .holds(est.inf_ratio >= est.envelope_inf - slack, est.inf_ratio - est.envelope_inf),
                );
            }
            Err(Error::DegenerateDenominator) => rep.note(format!("{id}: no state with n+ > 0")),
            Err(e) => rep.failed(id, "interaction-estimate-constant", &e),
        }
    }
    let ell = lp.ell();
    let chi = |x: &Vec3| lp.chi.chi(&[x[0] / ell, x[1] / ell, x[2] / ell]);
    let lat = match LatticeBox::new(ell, pc.commutator_m, Boundary::Box) {
        Ok(l) => l,
        Err(e) => return rep.failed("commutator-setup", "commutator-bound", &e),
    };
    for &n in &pc.commutator_n {
        for (j, kx) in [0.0, 2.0 * PI / ell].into_iter().enumerate() {
            let id = format!("commutator-N{n}-k{j}");
            match verify_commutator_bound(&lat, &chi, [kx, 0.0, 0.0], n, pc.max_dim) {
                Ok(c) => rep.push(
                    CheckRecord::new(id, "commutator-bound")
                        .input("N", n as u64)
                        .input("k", c.k.to_vec())
                        .input("dim", c.dim as u64)
                        .value(c.lambda_min)
                        .holds(c.lambda_min >= -tol.commutator, c.lambda_min),
                ),
                Err(e) => rep.failed(id, "commutator-bound", &e),
            }
        }
    }
}

const DEPLETION_COLUMNS: [&str; 15] = [
    "coupling",
    "a",
    "rho_a3",
    "l_units",
    "n",
    "dim",
    "e0_per_n",
    "lead",
    "energy_ratio",
    "nplus_frac",
    "count_residual",
    "bound_form",
    "bound_value",
    "residual",
    "dense_e0",
];

fn ed(cfg: &RunConfig, ctx: &Resolved, rep: &mut SuiteReport) {
    let ec = &cfg.ed;
    let tol = &cfg.tolerances;
    let mut lanczos = ec.lanczos;
    lanczos.seed = cfg.seed;
    let modes = match ModeSet::new(ec.big_l, ec.cutoff) {
        Ok(m) => m,
        Err(e) => return rep.failed("ed-setup", "exact-diagonalization", &e),
    };
    let max_n2 = 4 * ec.cutoff;

    let free = FourierSamples::from_fn(ec.big_l, max_n2, |_| 0.0);
    match build_hamiltonian_momentum(&modes, &free, ec.n, [0; 3], ec.max_dim).and_then(|h| h.ground_state(&lanczos)) {
        Ok(gs) => rep.push(
            CheckRecord::new("ed-free-condensate", "noninteracting-ground-state")
                .input("N", ec.n as u64)
                .input("E0", gs.e0)
                .value(gs.nplus)
                .holds(gs.e0 == 0.0 && gs.nplus == 0.0, gs.e0.abs() + gs.nplus),
        ),
        Err(e) => rep.failed("ed-free-condensate", "noninteracting-ground-state", &e),
    }

    for &n in &ec.dense_check_n {
        let id = format!("ed-lanczos-dense-N{n}");
        let res = FourierSamples::from_potential(&ctx.pot, ec.big_l, max_n2)
            .and_then(|fs| build_hamiltonian_momentum(&modes, &fs, n, [0; 3], ec.max_dim))
            .and_then(|h| h.ground_state(&lanczos));
        match res {
            Ok(gs) => match gs.solver.dense_e0 {
                Some(d) => rep.push(
                    CheckRecord::new(id, "iterative-vs-dense")
                        .input("dim", gs.dim as u64)
                        .value(gs.e0)
                        .reference(d)
                        .within((gs.e0 - d).abs(), tol.lanczos_dense),
                ),
                None => rep.note(format!("{id}: dim {} above the dense threshold", gs.dim)),
            },
            Err(e) => rep.failed(id, "iterative-vs-dense", &e),
        }
    }

    // second-order Rayleigh–Schrödinger for two bosons, with a majorant of the third order
    let c = ec.perturbation_coupling;
    let res = FourierSamples::from_potential(&ctx.pot.with_coupling(c), ec.big_l, max_n2).and_then(|fs| {
        let h = build_hamiltonian_momentum(&modes, &fs, 2, [0; 3], ec.max_dim)?;
        Ok((fs, h.ground_state(&lanczos)?))
    });
    match res {
        Ok((fs, gs)) => {
            let l3 = ec.big_l.powi(3);
            let e1 = fs.at(0) / l3;
            let k2: Vec<f64> = (1..modes.len()).map(|i| modes.k2(i)).collect();
            let e2: f64 = -(1..modes.len()).map(|i| fs.at(modes.n2(i)).powi(2) / (2.0 * modes.k2(i) * l3 * l3)).sum::<f64>();
            let kmin2 = k2.iter().copied().fold(f64::INFINITY, f64::min);
            let third = 4.0 * e2.abs() * (fs.at(0).abs() / l3) * k2.len() as f64 / (2.0 * kmin2);
            rep.push(
                CheckRecord::new("ed-perturbation-N2", "weak-coupling-expansion")
                    .input("coupling", c)
                    .input("second_order", e2)
                    .value(gs.e0)
                    .reference(e1 + e2)
                    .within((gs.e0 - e1 - e2).abs(), third),
            );
        }
        Err(e) => rep.failed("ed-perturbation-N2", "weak-coupling-expansion", &e),
    }

    let sweep = DepletionSweep {
        big_l: ec.big_l,
        n: ec.n,
        cutoff: ec.cutoff,
        couplings: ec.couplings.clone(),
        max_dim: ec.max_dim,
        lanczos,
    };
    match depletion_study(&ctx.pot, &sweep) {
        Ok(st) => {
            for row in &st.rows {
                rep.push(
                    CheckRecord::new(format!("ed-counts-c{}", row.coupling), "particle-number-split")
                        .input("coupling", row.coupling)
                        .input("dim", row.dim as u64)
                        .value(row.nplus_frac)
                        .within(row.count_residual, tol.counts),
                );
            }
            let fr: Vec<f64> = st.rows.iter().map(|r| r.nplus_frac).collect();
            let mut by_c: Vec<(f64, f64)> = st.rows.iter().map(|r| (r.coupling, r.nplus_frac)).collect();
            by_c.sort_by(|a, b| a.0.total_cmp(&b.0));
            let gap = by_c.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::INFINITY, f64::min);
            rep.push(
                CheckRecord::new("ed-depletion-monotone", "depletion-trend")
                    .input("couplings", ec.couplings.clone())
                    .input("nplus_frac", fr)
                    .value(st.empirical_constant)
                    .holds(st.depletion_monotone, gap),
            );
            rep.note(format!("empirical depletion constant {:.6e}; energy monotone: {}", st.empirical_constant, st.energy_monotone));
            let mut t = Table::new("depletion", &DEPLETION_COLUMNS);
            for row in &st.rows {
                let v = serde_json::to_value(row).expect("row serializes");
                t.push(DEPLETION_COLUMNS.iter().map(|c| v[*c].clone()).collect());
            }
            rep.tables.push(t);
        }
        Err(e) => rep.failed("ed-depletion-monotone", "depletion-trend", &e),
    }
}
