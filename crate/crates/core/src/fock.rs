//! Few-boson operators. Momentum-space Hamiltonians on a periodic box with a
//! Lanczos ground-state solver, and dense position-lattice realizations of the
//! potential decomposition and the commutator bound.

use crate::error::{Error, Result};
use crate::fourier::{radial_fourier, FnProfile};
use crate::localization::{LocalizedPotentials, Vec3};
use crate::par;
use crate::potential::RadialPotential;
use crate::scattering::solve_scattering;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

pub const MAX_PARTICLES: usize = 8;
pub const DEFAULT_MAX_DIM: usize = 200_000;
pub const DEFAULT_CUTOFF: i32 = 4;
pub const ENVELOPE_POINTS: usize = 80;

/// Plane-wave modes k = 2πn/L with |n|² ≤ cutoff. Index 0 is the constant mode.
#[derive(Debug, Clone)]
pub struct ModeSet {
    pub big_l: f64,
    pub cutoff: i32,
    pub modes: Vec<[i32; 3]>,
    lookup: HashMap<[i32; 3], usize>,
}

impl ModeSet {
    pub fn new(big_l: f64, cutoff: i32) -> Result<Self> {
        if !(big_l > 0.0) || cutoff < 0 {
            return Err(Error::DomainError(format!("L = {big_l}, cutoff = {cutoff}")));
        }
        let r = (cutoff as f64).sqrt().floor() as i32;
        let mut modes = Vec::new();
        for x in -r..=r {
            for y in -r..=r {
                for z in -r..=r {
                    if x * x + y * y + z * z <= cutoff {
                        modes.push([x, y, z]);
                    }
                }
            }
        }
        modes.sort_by_key(|n| (n[0] * n[0] + n[1] * n[1] + n[2] * n[2], *n));
        if modes.len() > 256 {
            return Err(Error::DomainError(format!("{} modes; at most 256 supported", modes.len())));
        }
        let lookup = modes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        Ok(Self { big_l, cutoff, modes, lookup })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn find(&self, n: [i32; 3]) -> Option<usize> {
        self.lookup.get(&n).copied()
    }

    pub fn n2(&self, i: usize) -> i32 {
        let n = self.modes[i];
        n[0] * n[0] + n[1] * n[1] + n[2] * n[2]
    }

    pub fn k2(&self, i: usize) -> f64 {
        let u = 2.0 * PI / self.big_l;
        u * u * self.n2(i) as f64
    }

    fn total(&self, state: &[u8]) -> [i32; 3] {
        state.iter().fold([0; 3], |acc, &m| {
            let n = self.modes[m as usize];
            [acc[0] + n[0], acc[1] + n[1], acc[2] + n[2]]
        })
    }
}

pub fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// N-boson states over `m` modes, stored as non-decreasing mode-index tuples
/// in lexicographic order.
#[derive(Debug, Clone)]
pub struct OccupationBasis {
    pub m: usize,
    pub n: usize,
    states: Vec<u8>,
    index: HashMap<u64, usize>,
}

fn pack(s: &[u8]) -> u64 {
    s.iter().fold(0u64, |acc, &x| (acc << 8) | x as u64)
}

impl OccupationBasis {
    pub fn full(m: usize, n: usize, max_dim: usize) -> Result<Self> {
        Self::filtered(m, n, max_dim, |_| true)
    }

    /// The states satisfying `keep`. `max_dim` bounds the kept count; the
    /// enumeration itself is bounded by 64·max_dim.
    pub fn filtered(m: usize, n: usize, max_dim: usize, keep: impl Fn(&[u8]) -> bool) -> Result<Self> {
        if m == 0 || m > 256 || n > MAX_PARTICLES {
            return Err(Error::DomainError(format!("m = {m} modes, N = {n} particles")));
        }
        let total = binomial((m + n - 1) as u64, n as u64) as usize;
        if total > max_dim.saturating_mul(64) {
            return Err(Error::DimensionOverflow { dim: total, max: max_dim });
        }
        let mut states = Vec::new();
        let mut cur = vec![0u8; n];
        loop {
            if keep(&cur) {
                states.extend_from_slice(&cur);
                if states.len() / n.max(1) > max_dim {
                    return Err(Error::DimensionOverflow { dim: states.len() / n.max(1), max: max_dim });
                }
            }
            // next non-decreasing tuple
            let mut i = n;
            while i > 0 && cur[i - 1] as usize == m - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            let v = cur[i - 1] + 1;
            for c in &mut cur[i - 1..] {
                *c = v;
            }
        }
        if n == 0 {
            states.clear();
        }
        let dim = if n == 0 { 1 } else { states.len() / n };
        let index = (0..dim).map(|i| (pack(&states[i * n..(i + 1) * n]), i)).collect();
        Ok(Self { m, n, states, index })
    }

    pub fn dim(&self) -> usize {
        if self.n == 0 {
            1
        } else {
            self.states.len() / self.n
        }
    }

    pub fn state(&self, i: usize) -> &[u8] {
        &self.states[i * self.n..(i + 1) * self.n]
    }

    pub fn index_of(&self, s: &[u8]) -> Option<usize> {
        self.index.get(&pack(s)).copied()
    }

    pub fn occupation(&self, i: usize, mode: usize) -> usize {
        self.state(i).iter().filter(|&&x| x as usize == mode).count()
    }
}

/// Row-compressed real operator.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    pub dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    pub symmetric: bool,
}

impl SparseOperator {
    /// From per-row entry lists; duplicate columns are summed, exact zeros dropped.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>, symmetric: bool) -> Self {
        let dim = rows.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < r.len() {
                let c = r[k].0;
                let mut v = 0.0;
                while k < r.len() && r[k].0 == c {
                    v += r[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { dim, row_ptr, cols, vals, symmetric }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| self.row(i).all(|(j, _)| j == i))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        par::fill_indexed(y, |i| self.row(i).map(|(j, v)| v * x[j]).sum());
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec(x, &mut y);
        y
    }

    /// max |A_ij − A_ji|.
    pub fn max_asymmetry(&self) -> f64 {
        let rows = par::map_range(self.dim, |i| self.row(i).map(|(j, v)| (v - self.get(j, i)).abs()).fold(0.0, f64::max));
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    pub fn expectation(&self, x: &[f64]) -> f64 {
        par::dot(x, &self.apply(x)) / par::dot(x, x)
    }
}

/// v̂ at the lattice momenta 2π|Δn|/L, keyed by the integer |Δn|².
#[derive(Debug, Clone)]
pub struct FourierSamples {
    pub big_l: f64,
    values: Vec<f64>,
}

impl FourierSamples {
    pub fn from_fn(big_l: f64, max_n2: i32, f: impl Fn(f64) -> f64) -> Self {
        let u = 2.0 * PI / big_l;
        let values = (0..=max_n2).map(|q2| f(u * (q2 as f64).sqrt())).collect();
        Self { big_l, values }
    }

    pub fn from_potential(pot: &RadialPotential, big_l: f64, max_n2: i32) -> Result<Self> {
        let mut prof = FnProfile::new(pot.support_radius(), |r| pot.value(r));
        prof.breaks = pot.breakpoints();
        let u = 2.0 * PI / big_l;
        let values = (0..=max_n2).map(|q2| radial_fourier(&prof, u * (q2 as f64).sqrt(), 1e-13)).collect::<Result<_>>()?;
        Ok(Self { big_l, values })
    }

    pub fn at(&self, n2: i32) -> f64 {
        self.values[n2 as usize]
    }
}

/// Σk²a_k†a_k + (2L³)⁻¹Σv̂(q)a†_{p+q}a†_{r−q}a_r a_p restricted to one total-momentum sector.
#[derive(Debug, Clone)]
pub struct MomentumHamiltonian {
    pub modes: ModeSet,
    pub basis: OccupationBasis,
    pub total_momentum: [i32; 3],
    pub op: SparseOperator,
    pub coupling_at_zero: f64,
}

pub fn momentum_sectors(modes: &ModeSet, n: usize, max_dim: usize) -> Result<Vec<([i32; 3], usize)>> {
    let basis = OccupationBasis::full(modes.len(), n, max_dim)?;
    let mut counts: HashMap<[i32; 3], usize> = HashMap::new();
    for i in 0..basis.dim() {
        *counts.entry(modes.total(basis.state(i))).or_default() += 1;
    }
    let mut v: Vec<_> = counts.into_iter().collect();
    v.sort();
    Ok(v)
}

pub fn build_hamiltonian_momentum(
    modes: &ModeSet,
    v_hat: &FourierSamples,
    n: usize,
    sector: [i32; 3],
    max_dim: usize,
) -> Result<MomentumHamiltonian> {
    if (v_hat.big_l - modes.big_l).abs() > 1e-12 * modes.big_l {
        return Err(Error::InconsistentInputs("Fourier samples taken on a different box".into()));
    }
    let basis = OccupationBasis::filtered(modes.len(), n, max_dim, |s| modes.total(s) == sector)?;
    let l3 = modes.big_l.powi(3);
    let m = modes.len();
    let rows = par::map_range(basis.dim(), |i| -> std::result::Result<Vec<(usize, f64)>, [u8; MAX_PARTICLES]> {
        let s = basis.state(i);
        let mut occ = vec![0u32; m];
        for &x in s {
            occ[x as usize] += 1;
        }
        let mut out = vec![(i, s.iter().map(|&x| modes.k2(x as usize)).sum())];
        let occupied: Vec<usize> = (0..m).filter(|&k| occ[k] > 0).collect();
        for &p in &occupied {
            for &r in &occupied {
                let mut o = occ.clone();
                let mut amp = (o[p] as f64).sqrt();
                o[p] -= 1;
                if o[r] == 0 {
                    continue;
                }
                amp *= (o[r] as f64).sqrt();
                o[r] -= 1;
                let (np, nr) = (modes.modes[p], modes.modes[r]);
                for p2 in 0..m {
                    let q = [modes.modes[p2][0] - np[0], modes.modes[p2][1] - np[1], modes.modes[p2][2] - np[2]];
                    let Some(r2) = modes.find([nr[0] - q[0], nr[1] - q[1], nr[2] - q[2]]) else { continue };
                    let mut o2 = o.clone();
                    let mut a = amp * ((o2[r2] + 1) as f64).sqrt();
                    o2[r2] += 1;
                    a *= ((o2[p2] + 1) as f64).sqrt();
                    o2[p2] += 1;
                    let mut target = Vec::with_capacity(n);
                    for (k, &c) in o2.iter().enumerate() {
                        target.extend(std::iter::repeat_n(k as u8, c as usize));
                    }
                    let q2 = q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
                    match basis.index_of(&target) {
                        Some(j) => out.push((j, a * v_hat.at(q2) / (2.0 * l3))),
                        None => {
                            let mut t = [0u8; MAX_PARTICLES];
                            t[..n].copy_from_slice(&target);
                            return Err(t);
                        }
                    }
                }
            }
        }
        Ok(out)
    });
    let rows = rows
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|t| Error::InconsistentInputs(format!("interaction left the momentum sector: {:?}", &t[..n])))?;
    let op = SparseOperator::from_rows(rows, true);
    Ok(MomentumHamiltonian { modes: modes.clone(), basis, total_momentum: sector, op, coupling_at_zero: v_hat.at(0) })
}

/// One-body P (onto the constant mode) and Q, with the N-body counts n₀, n₊
/// as diagonals in the occupation basis.
#[derive(Debug, Clone)]
pub struct Projectors {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub n0: Vec<f64>,
    pub nplus: Vec<f64>,
}

pub fn build_projectors(basis: &OccupationBasis) -> Projectors {
    let m = basis.m;
    let mut p = DMatrix::zeros(m, m);
    p[(0, 0)] = 1.0;
    let q = DMatrix::identity(m, m) - &p;
    let n0: Vec<f64> = (0..basis.dim()).map(|i| basis.occupation(i, 0) as f64).collect();
    let nplus = (0..basis.dim()).map(|i| basis.state(i).iter().filter(|&&x| x != 0).count() as f64).collect();
    Projectors { p, q, n0, nplus }
}

impl Projectors {
    /// (⟨n₀⟩, ⟨n₊⟩) in state `x`.
    pub fn expectations(&self, x: &[f64]) -> (f64, f64) {
        let norm = par::dot(x, x);
        let e = |d: &[f64]| par::sum_range(x.len(), |i| d[i] * x[i] * x[i]) / norm;
        (e(&self.n0), e(&self.nplus))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LanczosOptions {
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Residual tolerance relative to max(1, |E₀|).
    pub tol: f64,
    pub seed: u64,
    pub dense_threshold: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { krylov_dim: 200, max_restarts: 20, tol: 1e-9, seed: 20_240_917, dense_threshold: 2000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundState {
    pub e0: f64,
    #[serde(skip)]
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub method: String,
    pub dense_e0: Option<f64>,
    pub seed: u64,
}

fn normalize(x: &mut [f64]) {
    let n = par::dot(x, x).sqrt();
    x.iter_mut().for_each(|v| *v /= n);
}

/// Lowest eigenpair by restarted Lanczos with full reorthogonalization.
pub fn ground_state(op: &SparseOperator, opts: &LanczosOptions) -> Result<GroundState> {
    let d = op.dim;
    if d == 0 {
        return Err(Error::DomainError("empty operator".into()));
    }
    let dense_e0 = (d <= opts.dense_threshold).then(|| {
        let eig = op.to_dense().symmetric_eigen();
        eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    });
    let finish = |e0: f64, vector: Vec<f64>, iterations: usize, method: &str| {
        let hx = op.apply(&vector);
        let residual = par::sum_range(d, |i| (hx[i] - e0 * vector[i]).powi(2)).sqrt();
        GroundState { e0, vector, residual, iterations, method: method.into(), dense_e0, seed: opts.seed }
    };
    if op.is_diagonal() {
        let diag = op.diagonal();
        let (i0, e0) = diag.iter().copied().enumerate().fold((0, f64::INFINITY), |b, (i, v)| if v < b.1 { (i, v) } else { b });
        let mut x = vec![0.0; d];
        x[i0] = 1.0;
        return Ok(finish(e0, x, 0, "diagonal"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() - 0.5).collect();
    normalize(&mut start);
    let kmax = opts.krylov_dim.clamp(2, d);
    let mut iterations = 0;
    let mut best = None;
    for _ in 0..opts.max_restarts.max(1) {
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        let mut w = vec![0.0; d];
        let (theta, y) = loop {
            let j = basis.len() - 1;
            op.matvec(&basis[j], &mut w);
            iterations += 1;
            let a = par::dot(&w, &basis[j]);
            alpha.push(a);
            for _ in 0..2 {
                for v in &basis {
                    let c = par::dot(&w, v);
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
                }
            }
            let b = par::dot(&w, &w).sqrt();
            let k = alpha.len();
            let done_space = b <= 1e-13 * a.abs().max(1.0) || k == kmax;
            if k % 5 == 0 || done_space {
                let t = DMatrix::from_fn(k, k, |r, c| {
                    if r == c {
                        alpha[r]
                    } else if r + 1 == c {
                        beta[r]
                    } else if c + 1 == r {
                        beta[c]
                    } else {
                        0.0
                    }
                });
                let eig = t.symmetric_eigen();
                let (imin, theta) = eig.eigenvalues.iter().copied().enumerate().fold((0, f64::INFINITY), |m, (i, v)| if v < m.1 { (i, v) } else { m });
                let y: Vec<f64> = eig.eigenvectors.column(imin).iter().copied().collect();
                if done_space || b * y[k - 1].abs() <= 0.1 * opts.tol * theta.abs().max(1.0) {
                    break (theta, y);
                }
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        };
        let mut x = vec![0.0; d];
        for (c, v) in y.iter().zip(&basis) {
            x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += c * vi);
        }
        normalize(&mut x);
        let e0 = par::dot(&x, &op.apply(&x));
        let gs = finish(e0, x, iterations, "lanczos");
        let _ = theta;
        if gs.residual <= opts.tol * gs.e0.abs().max(1.0) {
            return Ok(gs);
        }
        start = gs.vector.clone();
        best = Some(gs);
    }
    let r = best.map_or(f64::NAN, |g| g.residual);
    Err(Error::NoConvergence(format!("residual {r:e} after {iterations} matrix-vector products")))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundStateResult {
    pub n: usize,
    pub dim: usize,
    pub e0: f64,
    pub n0: f64,
    pub nplus: f64,
    pub count_residual: f64,
    pub solver: GroundState,
}

impl MomentumHamiltonian {
    pub fn ground_state(&self, opts: &LanczosOptions) -> Result<GroundStateResult> {
        let gs = ground_state(&self.op, opts)?;
        let pr = build_projectors(&self.basis);
        let (n0, nplus) = pr.expectations(&gs.vector);
        Ok(GroundStateResult {
            n: self.basis.n,
            dim: self.basis.dim(),
            e0: gs.e0,
            n0,
            nplus,
            count_residual: (n0 + nplus - self.basis.n as f64).abs(),
            solver: gs,
        })
    }
}

/// `u64` dimension followed by the values as `f64`, all little-endian.
pub fn write_eigenvector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&(v.len() as u64).to_le_bytes())?;
    for x in v {
        f.write_all(&x.to_le_bytes())?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_eigenvector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 8 {
        return Err(Error::InconsistentInputs("truncated eigenvector header".into()));
    }
    let dim = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    if bytes.len() != 8 + 8 * dim {
        return Err(Error::InconsistentInputs(format!("expected {dim} values, file has {} bytes", bytes.len())));
    }
    Ok(bytes[8..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DepletionSweep {
    pub big_l: f64,
    pub n: usize,
    pub cutoff: i32,
    pub couplings: Vec<f64>,
    pub max_dim: usize,
    pub lanczos: LanczosOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DepletionRow {
    pub coupling: f64,
    pub a: f64,
    pub rho_a3: f64,
    /// L in units of (ρa)^{−1/2}.
    pub l_units: f64,
    pub n: usize,
    pub dim: usize,
    pub e0_per_n: f64,
    pub lead: f64,
    pub energy_ratio: f64,
    pub nplus_frac: f64,
    pub count_residual: f64,
    /// ρaL²(ρa³)^{1/2}.
    pub bound_form: f64,
    /// Empirical constant times `bound_form`.
    pub bound_value: f64,
    pub residual: f64,
    pub dense_e0: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DepletionStudy {
    pub rows: Vec<DepletionRow>,
    pub empirical_constant: f64,
    /// ⟨n₊⟩/N strictly decreases as the coupling decreases.
    pub depletion_monotone: bool,
    /// E₀ non-decreasing in the coupling.
    pub energy_monotone: bool,
    pub seed: u64,
}

/// Exact ground states in the zero-momentum sector for each coupling factor
/// applied to `pot`.
pub fn depletion_study(pot: &RadialPotential, sweep: &DepletionSweep) -> Result<DepletionStudy> {
    if sweep.couplings.is_empty() {
        return Err(Error::Config("depletion sweep needs at least one coupling".into()));
    }
    if !(2.0 * pot.support_radius() < sweep.big_l) {
        return Err(Error::GeometryViolation(format!("R = {} must be below L/2 = {}", pot.support_radius(), sweep.big_l / 2.0)));
    }
    let modes = ModeSet::new(sweep.big_l, sweep.cutoff)?;
    let mut rows = Vec::new();
    let rho = sweep.n as f64 / sweep.big_l.powi(3);
    for &c in &sweep.couplings {
        let (a, fs) = if c == 0.0 {
            (0.0, FourierSamples::from_fn(sweep.big_l, 4 * sweep.cutoff, |_| 0.0))
        } else {
            let p = pot.with_coupling(c);
            let sol = solve_scattering(&p, 2.0 * p.support_radius(), 1e-10)?;
            (sol.a, FourierSamples::from_potential(&p, sweep.big_l, 4 * sweep.cutoff)?)
        };
        let h = build_hamiltonian_momentum(&modes, &fs, sweep.n, [0; 3], sweep.max_dim)?;
        let gs = h.ground_state(&sweep.lanczos)?;
        let lead = 4.0 * PI * a * rho;
        let x = rho * a.powi(3);
        rows.push(DepletionRow {
            coupling: c,
            a,
            rho_a3: x,
            l_units: sweep.big_l * (rho * a).sqrt(),
            n: sweep.n,
            dim: gs.dim,
            e0_per_n: gs.e0 / sweep.n as f64,
            lead,
            energy_ratio: if lead > 0.0 { gs.e0 / (lead * sweep.n as f64) } else { f64::NAN },
            nplus_frac: gs.nplus / sweep.n as f64,
            count_residual: gs.count_residual,
            bound_form: rho * a * sweep.big_l.powi(2) * x.sqrt(),
            bound_value: 0.0,
            residual: gs.solver.residual,
            dense_e0: gs.solver.dense_e0,
        });
    }
    let empirical_constant = rows
        .iter()
        .filter(|r| r.bound_form > 0.0)
        .map(|r| r.nplus_frac / r.bound_form)
        .fold(0.0, f64::max);
    for r in &mut rows {
        r.bound_value = empirical_constant * r.bound_form;
    }
    let mut by_c: Vec<&DepletionRow> = rows.iter().collect();
    by_c.sort_by(|a, b| a.coupling.total_cmp(&b.coupling));
    let depletion_monotone = by_c.windows(2).all(|w| w[0].nplus_frac < w[1].nplus_frac);
    let energy_monotone = by_c.windows(2).all(|w| w[0].e0_per_n <= w[1].e0_per_n);
    Ok(DepletionStudy { rows, empirical_constant, depletion_monotone, energy_monotone, seed: sweep.lanczos.seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Periodic,
    Box,
}

/// M³ cell-centred sites on a cube of side `side` centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeBox {
    pub side: f64,
    pub m: usize,
    pub boundary: Boundary,
}

impl LatticeBox {
    pub fn new(side: f64, m: usize, boundary: Boundary) -> Result<Self> {
        if m < 2 || !(side > 0.0) {
            return Err(Error::DomainError(format!("lattice needs M ≥ 2 and side > 0, got M = {m}, side = {side}")));
        }
        Ok(Self { side, m, boundary })
    }

    pub fn h(&self) -> f64 {
        self.side / self.m as f64
    }

    pub fn weight(&self) -> f64 {
        self.h().powi(3)
    }

    pub fn n_sites(&self) -> usize {
        self.m.pow(3)
    }

    pub fn site(&self, i: usize) -> Vec3 {
        let m = self.m;
        let c = |j: usize| -0.5 * self.side + (j as f64 + 0.5) * self.h();
        [c(i / (m * m)), c((i / m) % m), c(i % m)]
    }

    pub fn displacement(&self, x: &Vec3, y: &Vec3) -> Vec3 {
        let mut d = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
        if self.boundary == Boundary::Periodic {
            for c in &mut d {
                *c -= self.side * (*c / self.side).round();
            }
        }
        d
    }

    /// Seven-point Laplacian (periodic, or Dirichlet outside the box).
    pub fn laplacian(&self) -> DMatrix<f64> {
        let (m, s) = (self.m as isize, self.n_sites());
        let h2 = self.h() * self.h();
        let mut lap = DMatrix::zeros(s, s);
        for i in 0..s {
            lap[(i, i)] = -6.0 / h2;
            let c = [(i / (self.m * self.m)) as isize, ((i / self.m) % self.m) as isize, (i % self.m) as isize];
            for axis in 0..3 {
                for step in [-1isize, 1] {
                    let mut n = c;
                    n[axis] += step;
                    if !(0..m).contains(&n[axis]) {
                        if self.boundary == Boundary::Box {
                            continue;
                        }
                        n[axis] = n[axis].rem_euclid(m);
                    }
                    let j = (n[0] * m * m + n[1] * m + n[2]) as usize;
                    lap[(i, j)] += 1.0 / h2;
                }
            }
        }
        lap
    }
}

/// w and ω sampled on pairs of lattice sites, with the h³-weighted ∫w₁(x, y)dy.
#[derive(Debug, Clone)]
pub struct PairKernels {
    pub lattice: LatticeBox,
    pub rho_mu: f64,
    pub a: f64,
    pub w: DMatrix<f64>,
    pub omega: DMatrix<f64>,
}

impl PairKernels {
    pub fn sample(lattice: &LatticeBox, lp: &LocalizedPotentials) -> Result<Self> {
        let s = lattice.n_sites();
        let sites: Vec<Vec3> = (0..s).map(|i| lattice.site(i)).collect();
        let ell = lp.ell();
        let chi: Vec<f64> = sites.iter().map(|x| lp.chi.chi(&[x[0] / ell, x[1] / ell, x[2] / ell])).collect();
        let mut w = DMatrix::zeros(s, s);
        let mut omega = DMatrix::zeros(s, s);
        for i in 0..s {
            for j in 0..s {
                let d = lattice.displacement(&sites[i], &sites[j]);
                let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                w[(i, j)] = chi[i] * lp.big_w(&d) * chi[j];
                omega[(i, j)] = lp.sol.omega(r);
                if lattice.boundary == Boundary::Box {
                    let direct = lp.w1(&sites[i], &sites[j]);
                    let derived = w[(i, j)] * (1.0 - omega[(i, j)]);
                    if (direct - derived).abs() > 1e-12 * direct.abs().max(1e-300) && (direct - derived).abs() > 1e-14 {
                        return Err(Error::KernelSamplingError(format!("w₁ mismatch at sites {i}, {j}: {direct} vs {derived}")));
                    }
                }
            }
        }
        if w.iter().chain(omega.iter()).any(|v| !v.is_finite()) {
            return Err(Error::KernelSamplingError("non-finite kernel sample".into()));
        }
        Ok(Self { lattice: *lattice, rho_mu: lp.geom.rho_mu, a: lp.geom.a, w, omega })
    }

    pub fn with_zero_omega(&self) -> Self {
        let mut k = self.clone();
        k.omega.fill(0.0);
        k
    }

    pub fn w1(&self, i: usize, j: usize) -> f64 {
        self.w[(i, j)] * (1.0 - self.omega[(i, j)])
    }

    pub fn w2(&self, i: usize, j: usize) -> f64 {
        self.w[(i, j)] * (1.0 - self.omega[(i, j)].powi(2))
    }

    /// h³Σ_y w₁(x_i, y).
    pub fn w1_row_integral(&self, i: usize) -> f64 {
        self.lattice.weight() * (0..self.lattice.n_sites()).map(|j| self.w1(i, j)).sum::<f64>()
    }

    /// (∬w₁, ∬w₂) as h⁶-weighted sums.
    pub fn double_integrals(&self) -> (f64, f64) {
        let s = self.lattice.n_sites();
        let h6 = self.lattice.weight().powi(2);
        let (mut a, mut b) = (0.0, 0.0);
        for i in 0..s {
            for j in 0..s {
                a += self.w1(i, j);
                b += self.w2(i, j);
            }
        }
        (h6 * a, h6 * b)
    }
}

/// N-particle tensor space (C^S)^⊗N, particle 0 most significant.
struct Tensor {
    s: usize,
    n: usize,
}

impl Tensor {
    fn dim(&self) -> usize {
        self.s.pow(self.n as u32)
    }

    fn site(&self, idx: usize, particle: usize) -> usize {
        (idx / self.s.pow((self.n - 1 - particle) as u32)) % self.s
    }

    /// I ⊗ … ⊗ ops[k].1 at particle ops[k].0 ⊗ … ⊗ I.
    fn embed(&self, ops: &[(usize, &DMatrix<f64>)]) -> DMatrix<f64> {
        let id = DMatrix::identity(self.s, self.s);
        let mut out = DMatrix::from_element(1, 1, 1.0);
        for p in 0..self.n {
            let f = ops.iter().find(|o| o.0 == p).map_or(&id, |o| o.1);
            out = out.kronecker(f);
        }
        out
    }

    fn pair_diag(&self, i: usize, j: usize, f: impl Fn(usize, usize) -> f64) -> Vec<f64> {
        (0..self.dim()).map(|x| f(self.site(x, i), self.site(x, j))).collect()
    }

    fn one_diag(&self, i: usize, f: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|x| f[self.site(x, i)]).collect()
    }
}

/// l·diag(d)·r.
fn sandwich(l: &DMatrix<f64>, d: &[f64], r: &DMatrix<f64>) -> DMatrix<f64> {
    let mut ld = l.clone();
    for (c, v) in d.iter().enumerate() {
        ld.column_mut(c).scale_mut(*v);
    }
    ld * r
}

fn scale_cols(l: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let mut ld = l.clone();
    for (c, v) in d.iter().enumerate() {
        ld.column_mut(c).scale_mut(*v);
    }
    ld
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    m + t
}

#[derive(Debug, Clone)]
pub struct PotsplitTerms {
    pub n: usize,
    pub dim: usize,
    pub lhs: DMatrix<f64>,
    /// Q₀ … Q₄.
    pub q: [DMatrix<f64>; 5],
    pub a2: DMatrix<f64>,
    pub n0: DMatrix<f64>,
    pub max_residual: f64,
}

/// Dense matrices of both sides of the potential decomposition on the full
/// N-particle tensor space of the lattice.
pub fn build_potsplit_terms(k: &PairKernels, n: usize, max_dim: usize) -> Result<PotsplitTerms> {
    if !(2..=3).contains(&n) {
        return Err(Error::DomainError(format!("N = {n}; the lattice decomposition is built for N ∈ {{2, 3}}")));
    }
    let s = k.lattice.n_sites();
    let t = Tensor { s, n };
    let dim = t.dim();
    if dim > max_dim {
        return Err(Error::DimensionOverflow { dim, max: max_dim });
    }
    let p1 = DMatrix::from_element(s, s, 1.0 / s as f64);
    let q1 = DMatrix::identity(s, s) - &p1;
    let f1: Vec<f64> = (0..s).map(|i| k.w1_row_integral(i)).collect();
    let rho = k.rho_mu;
    let zero = || DMatrix::<f64>::zeros(dim, dim);
    let mut lhs = zero();
    let mut q = [zero(), zero(), zero(), zero(), zero()];
    let mut a2 = zero();
    let mut n0 = zero();
    for i in 0..n {
        let (pi, qi) = (t.embed(&[(i, &p1)]), t.embed(&[(i, &q1)]));
        let f = t.one_diag(i, &f1);
        for (x, v) in f.iter().enumerate() {
            lhs[(x, x)] -= rho * v;
        }
        q[2] -= rho * sandwich(&qi, &f, &qi);
        q[1] -= rho * sym(sandwich(&qi, &f, &pi));
        q[0] -= rho * sandwich(&pi, &f, &pi);
        n0 += &pi;
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pp = t.embed(&[(i, &p1), (j, &p1)]);
            let pq = t.embed(&[(i, &p1), (j, &q1)]);
            let qp = t.embed(&[(i, &q1), (j, &p1)]);
            let qq = t.embed(&[(i, &q1), (j, &q1)]);
            let w = t.pair_diag(i, j, |a, b| k.w[(a, b)]);
            let om = t.pair_diag(i, j, |a, b| k.omega[(a, b)]);
            let w1 = t.pair_diag(i, j, |a, b| k.w1(a, b));
            let w2 = t.pair_diag(i, j, |a, b| k.w2(a, b));
            for (x, v) in w.iter().enumerate() {
                lhs[(x, x)] += 0.5 * v;
            }
            let x = &pp + &pq + &qp;
            let l = &qq + scale_cols(&x, &om);
            q[4] += 0.5 * sandwich(&l, &w, &l.transpose());
            q[3] += sym(sandwich(&pq, &w1, &qq));
            q[2] += sandwich(&pq, &w2, &qp) + sandwich(&pq, &w2, &pq);
            let half = 0.5 * sym(sandwich(&pp, &w1, &qq));
            q[2] += &half;
            a2 += &half;
            q[1] += sym(sandwich(&qp, &w2, &pp));
            q[0] += 0.5 * sandwich(&pp, &w2, &pp);
        }
    }
    let total = q.iter().fold(zero(), |acc, m| acc + m);
    let max_residual = (&lhs - total).amax();
    Ok(PotsplitTerms { n, dim, lhs, q, a2, n0, max_residual })
}

impl PotsplitTerms {
    /// A₀ as the quadratic polynomial in the n₀ operator.
    pub fn a0_operator(&self, k: &PairKernels) -> DMatrix<f64> {
        let (iw1, iw2) = k.double_integrals();
        let (l3, rho) = (k.lattice.side.powi(3), k.rho_mu);
        // A₀(x) = x(x−1)/(2ℓ⁶)∬w₂ − (ρx/ℓ³ + ¼(ρ − (x−1)/ℓ³)²)∬w₁ = c2x² + c1x + c0
        let c2 = iw2 / (2.0 * l3 * l3) - 0.25 * iw1 / (l3 * l3);
        let c1 = -iw2 / (2.0 * l3 * l3) - rho * iw1 / l3 + 0.5 * iw1 * (rho + 1.0 / l3) / l3;
        let c0 = -0.25 * (rho + 1.0 / l3).powi(2) * iw1;
        let id = DMatrix::<f64>::identity(self.dim, self.dim);
        &self.n0 * &self.n0 * c2 + &self.n0 * c1 + id * c0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteractionEstimate {
    pub samples: usize,
    pub skipped: usize,
    /// inf over used states of [⟨LHS⟩ − ⟨A₀ + A₂⟩]/[a(ρ_μ + ⟨n₀⟩ℓ⁻³)⟨n₊⟩].
    pub inf_ratio: f64,
    /// The same infimum along the lower boundary of the joint range of
    /// (⟨n₊⟩, ⟨LHS − A₀ − A₂⟩) over symmetric states.
    pub envelope_inf: f64,
    /// Lower bracket of `envelope_inf` from supporting lines.
    pub envelope_lower: f64,
    pub envelope_points: usize,
    pub a2_asymmetry: f64,
    pub seed: u64,
}

/// Orthonormal basis of the symmetric subspace, one column per site multiset.
fn symmetric_basis(t: &Tensor) -> DMatrix<f64> {
    let mut groups: std::collections::BTreeMap<Vec<usize>, Vec<usize>> = Default::default();
    for x in 0..t.dim() {
        let mut key: Vec<usize> = (0..t.n).map(|p| t.site(x, p)).collect();
        key.sort_unstable();
        groups.entry(key).or_default().push(x);
    }
    let mut b = DMatrix::zeros(t.dim(), groups.len());
    for (c, members) in groups.values().enumerate() {
        let v = 1.0 / (members.len() as f64).sqrt();
        for &x in members {
            b[(x, c)] = v;
        }
    }
    b
}

/// Infimum of f(ν)/g(ν) where f is the lower boundary of {(⟨n₊⟩, ⟨X⟩)}.
/// Ground states of X − μn₊ give boundary points (upper bracket, by chords)
/// and supporting lines f(ν) ≥ λ_min(X − μn₊) + μν (lower bracket). Each new
/// μ is the slope of the chord around the current minimizer.
fn envelope_infimum(x: &DMatrix<f64>, nplus: &DMatrix<f64>, nf: f64, denom: impl Fn(f64) -> f64, max_points: usize) -> (f64, f64, usize) {
    let scale = x.amax().max(1e-300);
    let probe = |mu: f64| {
        let eig = (x - nplus * mu).symmetric_eigen();
        let (i, lam) = eig.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |b, (i, &v)| if v < b.1 { (i, v) } else { b });
        let v = eig.eigenvectors.column(i).into_owned();
        (mu, lam, v.dot(&(nplus * &v)), v.dot(&(x * &v)))
    };
    let mut pts: Vec<(f64, f64, f64, f64)> = vec![probe(0.0)];
    for e in -3..=4 {
        let m = scale * 10f64.powi(e);
        pts.push(probe(m));
        pts.push(probe(-m));
    }
    let grid = |lo: f64, hi: f64| (0..=64).map(move |j| lo + (hi - lo) * j as f64 / 64.0);
    let (mut upper, mut lower) = (f64::INFINITY, f64::NEG_INFINITY);
    while pts.len() < max_points {
        let mut byv: Vec<(f64, f64)> = pts.iter().map(|p| (p.2, p.3)).collect();
        byv.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut hull: Vec<(f64, f64)> = Vec::new();
        for p in byv {
            while hull.len() >= 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                if (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            if hull.last().is_none_or(|h| p.0 > h.0) {
                hull.push(p);
            }
        }
        let (mut best, mut seg) = (f64::INFINITY, 0);
        for (i, w) in hull.windows(2).enumerate() {
            for nu in grid(w[0].0, w[1].0) {
                if nu > 1e-9 && nu <= nf {
                    let t = (nu - w[0].0) / (w[1].0 - w[0].0);
                    let r = (w[0].1 + t * (w[1].1 - w[0].1)) / denom(nu);
                    if r < best {
                        (best, seg) = (r, i);
                    }
                }
            }
        }
        upper = best;
        let (mut nu_low, mut low) = (nf, f64::INFINITY);
        for nu in grid(1e-6 * nf, nf).chain(hull.iter().map(|h| h.0).filter(|&v| v > 1e-9)) {
            let r = pts.iter().map(|p| p.1 + p.0 * nu).fold(f64::NEG_INFINITY, f64::max) / denom(nu);
            if r < low {
                (low, nu_low) = (r, nu);
            }
        }
        lower = low;
        if hull.len() < 2 || upper - lower <= 1e-3 * upper.abs() {
            break;
        }
        let seg_low = hull.windows(2).position(|w| w[0].0 <= nu_low && nu_low <= w[1].0).unwrap_or(seg);
        let slope = |i: usize| (hull[i + 1].1 - hull[i].1) / (hull[i + 1].0 - hull[i].0);
        let fresh = |mu: f64| !pts.iter().any(|p| (p.0 - mu).abs() <= 1e-12 * mu.abs().max(scale));
        let Some(mu) = [slope(seg_low), slope(seg)].into_iter().find(|&m| fresh(m)) else { break };
        pts.push(probe(mu));
    }
    (upper, lower, pts.len())
}

fn symmetrize(t: &Tensor, v: &[f64]) -> Vec<f64> {
    let perms: Vec<Vec<usize>> = match t.n {
        2 => vec![vec![0, 1], vec![1, 0]],
        _ => vec![vec![0, 1, 2], vec![0, 2, 1], vec![1, 0, 2], vec![1, 2, 0], vec![2, 0, 1], vec![2, 1, 0]],
    };
    let mut out = vec![0.0; v.len()];
    for (x, o) in out.iter_mut().enumerate() {
        for p in &perms {
            let y = p.iter().fold(0, |acc, &q| acc * t.s + t.site(x, q));
            *o += v[y];
        }
    }
    out
}

/// Empirical constant of the interaction estimate over symmetric states.
/// Sample 0 is the fully condensed state; every other sample mixes
/// independent random components from each n₊ sector with random weights.
/// The boundary infimum is reported alongside.
pub fn verify_interaction_estimate(terms: &PotsplitTerms, k: &PairKernels, samples: usize, seed: u64) -> Result<InteractionEstimate> {
    verify_interaction_estimate_with(terms, k, samples, seed, ENVELOPE_POINTS)
}

/// As [`verify_interaction_estimate`] with at most `points` boundary probes.
pub fn verify_interaction_estimate_with(
    terms: &PotsplitTerms,
    k: &PairKernels,
    samples: usize,
    seed: u64,
    points: usize,
) -> Result<InteractionEstimate> {
    let t = Tensor { s: k.lattice.n_sites(), n: terms.n };
    let lhs_minus = &terms.lhs - terms.a0_operator(k) - &terms.a2;
    let ell3 = k.lattice.side.powi(3);
    let nf = terms.n as f64;
    let id = DMatrix::<f64>::identity(terms.dim, terms.dim);
    // spectral projectors of n₀ by Lagrange interpolation over its eigenvalues 0..=N
    let sectors: Vec<DMatrix<f64>> = (0..=terms.n)
        .map(|c| {
            (0..=terms.n)
                .filter(|&m| m != c)
                .fold(id.clone(), |acc, m| acc * (&terms.n0 - &id * m as f64) / (c as f64 - m as f64))
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut inf, mut skipped) = (f64::INFINITY, 0);
    for idx in 0..samples {
        let v = if idx == 0 {
            nalgebra::DVector::from_element(terms.dim, 1.0)
        } else {
            let mut v = nalgebra::DVector::zeros(terms.dim);
            for proj in &sectors {
                let g: Vec<f64> = (0..terms.dim).map(|_| rng.gen::<f64>() - 0.5).collect();
                let part = proj * nalgebra::DVector::from_vec(symmetrize(&t, &g));
                let norm = part.norm();
                let u: f64 = rng.gen();
                if norm > 0.0 {
                    v += part * (u / norm);
                }
            }
            v
        };
        let x = v.normalize();
        let n0 = x.dot(&(&terms.n0 * &x));
        let np = nf - n0;
        if np.abs() <= 1e-12 {
            skipped += 1;
            continue;
        }
        let num = x.dot(&(&lhs_minus * &x));
        inf = inf.min(num / (k.a * (k.rho_mu + n0 / ell3) * np));
    }
    if skipped == samples {
        return Err(Error::DegenerateDenominator);
    }
    let b = symmetric_basis(&t);
    let xs = b.transpose() * &lhs_minus * &b;
    let ns = b.transpose() * (&id * nf - &terms.n0) * &b;
    let (envelope_inf, envelope_lower, envelope_points) =
        envelope_infimum(&xs, &ns, nf, |nu| k.a * (k.rho_mu + (nf - nu) / ell3) * nu, points);
    Ok(InteractionEstimate {
        samples,
        skipped,
        inf_ratio: inf,
        envelope_inf,
        envelope_lower,
        envelope_points,
        a2_asymmetry: (&terms.a2 - terms.a2.transpose()).amax(),
        seed,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommutatorReport {
    pub n: usize,
    pub k: Vec3,
    pub dim: usize,
    pub lambda_min: f64,
    pub commutator_norm: f64,
    pub pass: bool,
}

/// λ_min(N − [b_k, b_k†]) on the symmetric N-particle space of the lattice,
/// with b_k = ℓ⁻³a†(θ)a(Qχe^{−ikx}) and χ normalized so that h³Σχ² = ℓ³.
pub fn verify_commutator_bound(
    lattice: &LatticeBox,
    chi: &dyn Fn(&Vec3) -> f64,
    k: Vec3,
    n: usize,
    max_dim: usize,
) -> Result<CommutatorReport> {
    let s = lattice.n_sites();
    let basis = OccupationBasis::full(s, n, max_dim)?;
    let dim = basis.dim();
    let l3 = lattice.side.powi(3);
    let sqh = lattice.weight().sqrt();
    let raw: Vec<f64> = (0..s).map(|i| chi(&lattice.site(i))).collect();
    let norm2 = lattice.weight() * raw.iter().map(|c| c * c).sum::<f64>();
    if !(norm2 > 0.0) {
        return Err(Error::KernelSamplingError("χ vanishes on every lattice site".into()));
    }
    let scale = (l3 / norm2).sqrt();
    let mut g: Vec<Complex64> = (0..s)
        .map(|i| {
            let x = lattice.site(i);
            let ph = -(k[0] * x[0] + k[1] * x[1] + k[2] * x[2]);
            Complex64::from_polar(sqh * scale * raw[i], ph)
        })
        .collect();
    let mean = g.iter().sum::<Complex64>() / s as f64;
    g.iter_mut().for_each(|v| *v -= mean);
    let theta = sqh;
    let mut b = DMatrix::<Complex64>::zeros(dim, dim);
    for col in 0..dim {
        let st = basis.state(col);
        for y in 0..s {
            let ny = st.iter().filter(|&&v| v as usize == y).count();
            if ny == 0 || g[y] == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut rem: Vec<u8> = st.to_vec();
            let pos = rem.iter().position(|&v| v as usize == y).unwrap();
            rem.remove(pos);
            for x in 0..s {
                let nx = rem.iter().filter(|&&v| v as usize == x).count();
                let mut tgt = rem.clone();
                let at = tgt.partition_point(|&v| (v as usize) <= x);
                tgt.insert(at, x as u8);
                let row = basis.index_of(&tgt).expect("occupation basis is closed under hopping");
                let amp = (ny as f64).sqrt() * ((nx + 1) as f64).sqrt();
                b[(row, col)] += g[y].conj() * theta * amp / l3;
            }
        }
    }
    let bd = b.adjoint();
    let c = &b * &bd - &bd * &b;
    let m = DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(n as f64, 0.0) - &c;
    let eig = m.symmetric_eigen();
    let lambda_min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let commutator_norm = c.symmetric_eigen().eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(CommutatorReport { n, k, dim, lambda_min, commutator_norm, pass: lambda_min >= -1e-10 })
}
