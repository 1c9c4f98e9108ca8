//! Sequential vs. rayon pool on the hot loops: sliding-pair evaluation,
//! Hamiltonian assembly and the Lanczos solve.
//!
//! Built without the `parallel` feature both variants run sequentially.

use bose_cert::fock::{build_hamiltonian_momentum, FourierSamples, LanczosOptions, ModeSet, DEFAULT_CUTOFF};
use bose_cert::localization::*;
use bose_cert::par;
use bose_cert::potential::RadialPotential;
use bose_cert::scattering::solve_scattering;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn variants() -> [(&'static str, usize); 2] {
    [("sequential", 1), ("rayon", par::threads().max(std::thread::available_parallelism().map_or(1, |n| n.get())))]
}

fn sliding(c: &mut Criterion) {
    let pot = RadialPotential::square_well(2.0, 1.0).unwrap();
    let sol = solve_scattering(&pot, 2.0, 1e-10).unwrap();
    let chi = build_bump(DEFAULT_STEEPNESS).unwrap();
    let p = GeometryParams { rho_mu: 1e-6 / sol.a.powi(3), k: 10.0, l_over_ell: 4.0, s: 0.02, b: 0.1, xi: 3.0, delta: 0.0, epsilon: 0.0 };
    let geom = BoxGeometry::new(&p, sol.a, 1.0).unwrap();
    let pairs = sample_pairs(&geom, 8, 1);
    let mut g = c.benchmark_group("sliding_8_pairs");
    g.sample_size(10);
    for (name, threads) in variants() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &threads, |b, &t| {
            b.iter(|| par::with_threads(t, || black_box(sliding_identity_check(&geom, &pot, &sol, &chi, &pairs, 1e-5).unwrap())))
        });
    }
    g.finish();
}

fn exact_diagonalization(c: &mut Criterion) {
    let big_l = 10.0;
    let modes = ModeSet::new(big_l, DEFAULT_CUTOFF).unwrap();
    let pot = RadialPotential::square_well(2.0, 1.0).unwrap();
    let fs = FourierSamples::from_potential(&pot, big_l, 4 * DEFAULT_CUTOFF).unwrap();
    let opts = LanczosOptions { dense_threshold: 0, ..LanczosOptions::default() };
    let mut g = c.benchmark_group("ed_n5");
    g.sample_size(10);
    for (name, threads) in variants() {
        g.bench_with_input(BenchmarkId::new("assemble", name), &threads, |b, &t| {
            b.iter(|| par::with_threads(t, || black_box(build_hamiltonian_momentum(&modes, &fs, 5, [0; 3], 200_000).unwrap())))
        });
        let h = build_hamiltonian_momentum(&modes, &fs, 5, [0; 3], 200_000).unwrap();
        g.bench_with_input(BenchmarkId::new("lanczos", name), &threads, |b, &t| {
            b.iter(|| par::with_threads(t, || black_box(h.ground_state(&opts).unwrap().e0)))
        });
    }
    g.finish();
}

criterion_group!(benches, sliding, exact_diagonalization);
criterion_main!(benches);
